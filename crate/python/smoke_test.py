"""Smoke test for the deepfir Python module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/deepfir-*.whl
"""

import math
import random

import deepfir


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    assert deepfir.SAMPLE_RATE == 16000

    w = deepfir.hamming(256)
    assert close(sum(w), 137.78, 1e-9)
    rise, fall = deepfir.hann_crossfade(16)
    assert all(close(r + f, 1.0, 1e-12) for r, f in zip(rise, fall))

    # a 127-sample delay collapses to an impulse
    taps = [0.0] * 128
    taps[127] = 1.0
    mp = deepfir.minimum_phase(taps)
    assert close(mp[0], 1.0, 1e-9) and max(abs(v) for v in mp[1:]) < 1e-9
    samples, ms = deepfir.group_delay([1.0] * 128)
    assert close(samples, 63.5, 1e-6) and close(ms, 3.96875, 1e-6)

    rng = random.Random(0)
    x = [rng.uniform(-0.5, 0.5) for _ in range(8000)]
    assert deepfir.si_sdr(x, x) == 60.0
    assert deepfir.compressed_spectral_loss(x, x) == 0.0
    noisy = [v + rng.uniform(-0.05, 0.05) for v in x]
    assert 0 < deepfir.si_sdr(x, noisy) < 60
    assert close(deepfir.si_sdr_improvement(noisy, x, x), 60 - deepfir.si_sdr(x, noisy), 1e-9)

    lat = deepfir.latency("deepfir", 1.0, 0.25)
    assert close(lat["end_to_end_ms"], 3.35, 1e-9)

    weights = deepfir.Weights.identity()
    assert weights.parameter_count == 627040
    assert weights.dims["out_dim"] == 128
    reloaded = deepfir.Weights.from_bytes(weights.to_bytes())
    assert reloaded.head == "taps"

    # chunked streaming through identity weights returns the input
    engine = deepfir.Engine(weights, synthesis_ms=1.0)
    out = []
    for start in range(0, len(x), 333):
        out += engine.push(x[start:start + 333])
    out += engine.finish()
    out = out[: len(x)]
    assert max(abs(a - b) for a, b in zip(out, x)) < 1e-9
    assert engine.hops == math.ceil(len(x) / 16)
    assert close(engine.mean_group_delay_ms, 0.0, 1e-9)

    ola = deepfir.Engine(deepfir.Weights.identity("mask"), mode="ola")
    y = ola.push(x) + ola.finish()
    assert max(abs(y[n] - x[n - 128]) for n in range(256, len(x))) < 1e-9

    try:
        deepfir.Weights.from_bytes(b"nope")
    except ValueError as e:
        assert "format-error" in str(e)
    else:
        raise AssertionError("bad weights accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
