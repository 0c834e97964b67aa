//! The three worked examples, bundled as problem files.

use crate::config::{parse_config, ProblemConfig};
use crate::error::{Error, Result};

pub const EXAMPLE1: &str = include_str!("../configs/example1.toml");
pub const EXAMPLE2: &str = include_str!("../configs/example2.toml");
pub const EXAMPLE3: &str = include_str!("../configs/example3.toml");

pub const NAMES: [&str; 3] = ["example1", "example2", "example3"];

pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "example2" => Some(EXAMPLE2),
        "example3" => Some(EXAMPLE3),
        _ => None,
    }
}

pub fn example(name: &str) -> Result<ProblemConfig> {
    let src = source(name).ok_or_else(|| Error::InvalidInput(format!("no bundled example '{}'", name)))?;
    parse_config(src)
}

pub fn example1() -> ProblemConfig {
    parse_config(EXAMPLE1).expect("bundled example1 parses")
}

pub fn example2() -> ProblemConfig {
    parse_config(EXAMPLE2).expect("bundled example2 parses")
}

pub fn example3() -> ProblemConfig {
    parse_config(EXAMPLE3).expect("bundled example3 parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{KeplerScale, Perturbation};

    #[test]
    fn bundled_files_parse() {
        for name in NAMES {
            assert_eq!(example(name).unwrap().spec.name, name);
        }
        assert!(example("example4").is_err());
    }

    #[test]
    fn matrices_match_their_definitions() {
        let s2 = 2f64.sqrt();
        let a = example1().spec.family.eval(0.5);
        let want = [0.25 - 1.0, s2 + 0.5, 0.5 - s2, 5f64.sqrt() + 0.5];
        for (i, w) in want.iter().enumerate() {
            assert!((a.get(i, i) - w).abs() < 1e-15);
        }
        assert!(a.is_diagonal());
        assert!(matches!(
            example1().spec.perturbation,
            Perturbation::Kepler { a, scale: KeplerScale::LambdaSquared } if a == 1.0
        ));

        let c = example3();
        assert_eq!(c.interval, (-1.0, 1.0));
        let a = c.spec.family.eval(-1.0);
        let want = [4.5, -1.0 - 10f64.sqrt(), 9.5, -1.0 + 10f64.sqrt(), 25.5];
        for (i, w) in want.iter().enumerate() {
            assert!((a.get(i, i) - w).abs() < 1e-14);
        }
        assert_eq!(example2().interval, (-0.5, 0.5));
    }
}
