use serde::{Deserialize, Serialize};

use super::{gas_names, CategoricalTable, Gas, GasTable};

/// Gases binned by min-max normalization instead of fixed ppm limits.
pub const RANGE_BINNED: [Gas; 2] = [Gas::Nitrogen, Gas::Oxygen];

/// Upper (inclusive) ppm limits of categories 1, 2 and 3 per the IEEE
/// C57-104 condition table; anything above the last limit is category 4.
fn ppm_limits(gas: Gas) -> Option<[f64; 3]> {
    Some(match gas {
        Gas::Hydrogen => [100.0, 700.0, 1800.0],
        Gas::Methane => [120.0, 400.0, 1000.0],
        Gas::Acetylene => [35.0, 50.0, 80.0],
        Gas::Ethylene => [50.0, 100.0, 200.0],
        Gas::Ethane => [65.0, 100.0, 200.0],
        Gas::CarbonMonoxide => [350.0, 570.0, 1400.0],
        Gas::CarbonDioxide => [2500.0, 4000.0, 10000.0],
        Gas::Tcg => [720.0, 1920.0, 4630.0],
        Gas::Nitrogen | Gas::Oxygen => return None,
    })
}

fn bin(value: f64, limits: [f64; 3]) -> u8 {
    1 + limits.iter().filter(|&&b| value > b).count() as u8
}

/// Category of a concentration for one of the eight fixed-limit gases.
///
/// Returns `None` for nitrogen and oxygen, whose category depends on the
/// column range (see [`Discretizer`]).
pub fn ppm_category(gas: Gas, value: f64) -> Option<u8> {
    ppm_limits(gas).map(|l| bin(value, l))
}

/// Category of a value already normalized to `[0, 1]`:
/// `[0, .25] -> 1`, `(.25, .5] -> 2`, `(.5, .75] -> 3`, `(.75, 1] -> 4`.
pub fn unit_category(u: f64) -> u8 {
    bin(u, [0.25, 0.5, 0.75])
}

/// Fitted discretization: fixed ppm limits plus the observed nitrogen and
/// oxygen ranges used for their min-max normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    /// `(min, max)` per entry of [`RANGE_BINNED`].
    pub ranges: [(f64, f64); 2],
}

impl Discretizer {
    pub fn fit(table: &GasTable) -> Discretizer {
        let range = |g: Gas| {
            table
                .column(g)
                .into_iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        };
        Discretizer {
            ranges: RANGE_BINNED.map(range),
        }
    }

    pub fn category(&self, gas: Gas, value: f64) -> u8 {
        if let Some(c) = ppm_category(gas, value) {
            return c;
        }
        let k = RANGE_BINNED.iter().position(|&g| g == gas).expect("range-binned gas");
        let (lo, hi) = self.ranges[k];
        let u = if hi > lo {
            ((value - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        unit_category(u)
    }

    pub fn apply(&self, table: &GasTable) -> CategoricalTable {
        let rows = table
            .rows()
            .iter()
            .map(|r| Gas::ALL.iter().map(|&g| self.category(g, r[g.index()])).collect())
            .collect();
        CategoricalTable::new(gas_names(), rows, table.decisions().to_vec())
            .expect("ten categories per row")
    }
}

/// Discretizes every gas into categories `1..=4`, fitting the
/// nitrogen/oxygen ranges on `table` itself.
pub fn discretize(table: &GasTable) -> CategoricalTable {
    Discretizer::fit(table).apply(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GAS_COUNT;
    use proptest::prelude::*;

    #[test]
    fn fixed_limit_examples() {
        assert_eq!(ppm_category(Gas::Hydrogen, 100.0), Some(1));
        assert_eq!(ppm_category(Gas::Hydrogen, 101.0), Some(2));
        assert_eq!(ppm_category(Gas::Hydrogen, 1801.0), Some(4));
        assert_eq!(ppm_category(Gas::Methane, 401.0), Some(3));
        assert_eq!(ppm_category(Gas::Acetylene, 35.0), Some(1));
        assert_eq!(ppm_category(Gas::Tcg, 4631.0), Some(4));
        assert_eq!(ppm_category(Gas::Nitrogen, 5.0), None);
    }

    #[test]
    fn carbon_dioxide_overlap_resolves_low() {
        assert_eq!(ppm_category(Gas::CarbonDioxide, 2500.0), Some(1));
        assert_eq!(ppm_category(Gas::CarbonDioxide, 2500.5), Some(2));
        assert_eq!(ppm_category(Gas::CarbonDioxide, 4000.0), Some(2));
    }

    #[test]
    fn unit_bins_have_no_gaps() {
        assert_eq!(unit_category(0.0), 1);
        assert_eq!(unit_category(0.25), 1);
        assert_eq!(unit_category(0.255), 2);
        assert_eq!(unit_category(0.5), 2);
        assert_eq!(unit_category(0.505), 3);
        assert_eq!(unit_category(0.75), 3);
        assert_eq!(unit_category(0.751), 4);
        assert_eq!(unit_category(1.0), 4);
    }

    #[test]
    fn nitrogen_min_max() {
        let rows = [0.0, 50.0, 100.0]
            .iter()
            .map(|&n| {
                let mut r = [1.0; GAS_COUNT];
                r[Gas::Nitrogen.index()] = n;
                r
            })
            .collect();
        let t = GasTable::new(rows, vec![0, 1, 0]).unwrap();
        let c = discretize(&t);
        let n = Gas::Nitrogen.index();
        let cats: Vec<u8> = c.rows().iter().map(|r| r[n]).collect();
        assert_eq!(cats, vec![1, 2, 4]);
        // constant oxygen column normalizes to 0
        assert!(c.rows().iter().all(|r| r[Gas::Oxygen.index()] == 1));
    }

    #[test]
    fn unseen_range_values_clamp() {
        let d = Discretizer {
            ranges: [(0.0, 100.0), (0.0, 10.0)],
        };
        assert_eq!(d.category(Gas::Nitrogen, 500.0), 4);
        assert_eq!(d.category(Gas::Oxygen, -1.0), 1);
    }

    proptest! {
        #[test]
        fn fixed_limits_are_monotone(a in 0.0f64..20000.0, b in 0.0f64..20000.0) {
            let (x, y) = if a <= b { (a, b) } else { (b, a) };
            for g in Gas::ALL {
                if let (Some(cx), Some(cy)) = (ppm_category(g, x), ppm_category(g, y)) {
                    prop_assert!(cx <= cy);
                    prop_assert!((1..=4).contains(&cx));
                }
            }
        }
    }
}
