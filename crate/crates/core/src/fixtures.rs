//! Kernels from the worked examples, shipped as JSON under `fixtures/`.

use crate::kernel::KernelSpec;

pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

impl Fixture {
    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::from_json(self.json).expect("shipped fixtures parse")
    }
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "efp",
        description: "a_n = 1/(n(n+1))",
        json: include_str!("../fixtures/efp.json"),
    },
    Fixture {
        name: "unbounded_p2",
        description: "a_n = 2^(n-1)/(n(n+1))",
        json: include_str!("../fixtures/unbounded_p2.json"),
    },
    Fixture {
        name: "geometric_null_p3",
        description: "a_n = -3^n",
        json: include_str!("../fixtures/geometric_null_p3.json"),
    },
    Fixture {
        name: "rouche_first_plus",
        description: "prefix [3/2, -9/16], tail 400 (1/20)^n",
        json: include_str!("../fixtures/rouche_first_plus.json"),
    },
    Fixture {
        name: "rouche_first_minus",
        description: "prefix [3/2, -9/16], tail -400 (1/20)^n",
        json: include_str!("../fixtures/rouche_first_minus.json"),
    },
    Fixture {
        name: "rouche_table",
        description: "prefix [1, -41/36, 8/9, -34/81, 16/81, -4/81], tail 2^(-n)/64",
        json: include_str!("../fixtures/rouche_table.json"),
    },
    Fixture {
        name: "rouche_final",
        description: "prefix [4, -4], tail 2^(-(n-1))",
        json: include_str!("../fixtures/rouche_final.json"),
    },
    Fixture {
        name: "marginal_zeta3",
        description: "a_n = c0 (-1)^n / n^3, c0 = 1/zeta(3)",
        json: include_str!("../fixtures/marginal_zeta3.json"),
    },
    Fixture {
        name: "geometric_half",
        description: "a_n = 2^(-n)",
        json: include_str!("../fixtures/geometric_half.json"),
    },
];

pub fn by_name(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// Shorthand for tests and examples: the parsed kernel of a shipped fixture.
pub fn kernel(name: &str) -> KernelSpec {
    by_name(name).unwrap_or_else(|| panic!("no fixture named {name}")).kernel()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses_and_names_are_unique() {
        for (i, f) in FIXTURES.iter().enumerate() {
            f.kernel();
            assert!(FIXTURES[..i].iter().all(|g| g.name != f.name));
        }
    }

    #[test]
    fn zeta_constant_matches_reciprocal() {
        let k = kernel("marginal_zeta3");
        let crate::kernel::TailModel::Parametric { c, .. } = k.tail else { panic!() };
        assert_eq!(c, 1.0 / 1.202_056_903_159_594_3);
    }
}
