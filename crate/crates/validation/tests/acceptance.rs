//! Runs every acceptance criterion, printing one PASS/FAIL line each, and
//! exits non-zero if any failed.

fn main() {
    let mut failures = 0;
    for c in &deepfir_validation::CRITERIA {
        let v = deepfir_validation::evaluate(c);
        failures += usize::from(!v.passed);
        println!("{v}");
    }
    let total = deepfir_validation::CRITERIA.len();
    println!("acceptance: {} passed, {failures} failed", total - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
