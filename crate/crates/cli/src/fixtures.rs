//! Problem files shipped with the binary for `reproduce`.

use crate::problem::ProblemFile;

macro_rules! fixture {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/", $name, ".problem")))
    };
}

pub const FIXTURES: [(&str, &str); 11] = [
    fixture!("linear_template"),
    fixture!("linear_power"),
    fixture!("linear_sqrt"),
    fixture!("linear_quarter"),
    fixture!("linear_hundredth"),
    fixture!("quasilinear_mixed"),
    fixture!("quasilinear_manufactured"),
    fixture!("quasilinear_higher"),
    fixture!("semilinear_unstable"),
    fixture!("semilinear_stable"),
    fixture!("semilinear_manufactured"),
];

pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parsed fixture. Panics on an unknown name or a broken file; both are
/// build defects, not user input.
pub fn fixture(name: &str) -> ProblemFile {
    let text = fixture_text(name).unwrap_or_else(|| panic!("no fixture named {name}"));
    ProblemFile::parse(text).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}
