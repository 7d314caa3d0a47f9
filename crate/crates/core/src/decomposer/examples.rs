//! Generators for the standard example fields.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{OperatorField, PartitionedSpace, SamplePoint};
use crate::matrix::{c, from_real_rows, identity, jordan_block, r, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    /// Points `i = 1..N`, fibers `[[1/i, 1], [0, -1/(2i)]]`, weight 1.
    InverseSequence,
    /// Grid `j/m` on (0, 1], fibers `[[l, 1], [0, -l/2]]`, weight `1/m`.
    UnitInterval,
    /// Grid `j/m`, fibers `[[l, phi(l)], [0, l]]`, weight `1/m`.
    ScalarPlusNilpotent,
    /// As `ScalarPlusNilpotent` with `phi = 1`.
    NilpotentOne,
    /// As `ScalarPlusNilpotent` with `phi` the indicator of (0, 1/2].
    NilpotentIndicator,
    /// One-dimensional fibers.
    Normal,
    /// Every fiber `J_2(0)`.
    ConstantJordan,
}

impl ExampleName {
    pub const ALL: [ExampleName; 7] = [
        ExampleName::InverseSequence,
        ExampleName::UnitInterval,
        ExampleName::ScalarPlusNilpotent,
        ExampleName::NilpotentOne,
        ExampleName::NilpotentIndicator,
        ExampleName::Normal,
        ExampleName::ConstantJordan,
    ];

    /// Accepted spellings; the first is canonical.
    pub fn names(self) -> &'static [&'static str] {
        match self {
            ExampleName::InverseSequence => &["ex2.1", "ex2_1", "inverse-sequence"],
            ExampleName::UnitInterval => &["ex2.2", "ex2_2", "unit-interval"],
            ExampleName::ScalarPlusNilpotent => &["prop4.3", "prop4_3", "scalar-plus-nilpotent"],
            ExampleName::NilpotentOne => &["lemma4.4", "lemma4_4", "nilpotent-one"],
            ExampleName::NilpotentIndicator => &["lemma4.5", "lemma4_5", "nilpotent-indicator"],
            ExampleName::Normal => &["normal"],
            ExampleName::ConstantJordan => &["const-jordan", "constant-jordan"],
        }
    }

    pub fn as_str(self) -> &'static str {
        self.names()[0]
    }
}

impl FromStr for ExampleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ExampleName::ALL
            .into_iter()
            .find(|n| n.names().contains(&key.as_str()))
            .ok_or_else(|| Error::UnknownExample(s.to_string()))
    }
}

impl std::fmt::Display for ExampleName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Off-diagonal coupling `phi(l)` for the scalar-plus-nilpotent fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Phi {
    /// `phi = c`.
    Const(f64),
    /// 1 on `(a, b]`, 0 elsewhere.
    Indicator(f64, f64),
    /// `phi = a + b l`.
    Linear(f64, f64),
}

impl Phi {
    pub fn eval(&self, l: f64) -> f64 {
        match *self {
            Phi::Const(v) => v,
            Phi::Indicator(a, b) => {
                if l > a && l <= b {
                    1.0
                } else {
                    0.0
                }
            }
            Phi::Linear(a, b) => a + b * l,
        }
    }
}

impl FromStr for Phi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadParams(format!("cannot parse phi '{s}'; expected const:c, indicator:a,b or linear:a,b"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums = args
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<f64>>>()?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        match (kind.trim(), nums.as_slice()) {
            ("const", [v]) => Ok(Phi::Const(*v)),
            ("indicator", [a, b]) if a <= b => Ok(Phi::Indicator(*a, *b)),
            ("linear", [a, b]) => Ok(Phi::Linear(*a, *b)),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Phi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phi::Const(v) => write!(f, "const:{v}"),
            Phi::Indicator(a, b) => write!(f, "indicator:{a},{b}"),
            Phi::Linear(a, b) => write!(f, "linear:{a},{b}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExampleParams {
    /// Number of points of the inverse sequence and constant fields.
    pub fibers: Option<usize>,
    /// Grid size `m` on (0, 1].
    pub grid: Option<usize>,
    /// Number of points of the normal field.
    pub samples: Option<usize>,
    /// Explicit eigenvalues of the normal field.
    pub values: Option<Vec<f64>>,
    pub phi: Option<Phi>,
}

impl ExampleParams {
    pub fn fibers(n: usize) -> Self {
        Self {
            fibers: Some(n),
            ..Default::default()
        }
    }

    pub fn grid(m: usize) -> Self {
        Self {
            grid: Some(m),
            ..Default::default()
        }
    }

    pub fn samples(n: usize) -> Self {
        Self {
            samples: Some(n),
            ..Default::default()
        }
    }
}

fn positive(v: Option<usize>, what: &str) -> Result<usize> {
    match v {
        Some(n) if n > 0 => Ok(n),
        Some(_) => Err(Error::BadParams(format!("{what} must be positive"))),
        None => Err(Error::BadParams(format!("{what} is required"))),
    }
}

fn grid_label(j: usize, m: usize) -> String {
    format!("{}", j as f64 / m as f64)
}

fn grid_field(m: usize, fiber: impl Fn(f64) -> CMatrix) -> Result<OperatorField> {
    let weight = 1.0 / m as f64;
    let points = (1..=m).map(|j| SamplePoint::new(grid_label(j, m), weight, 2)).collect();
    let fibers = (1..=m).map(|j| fiber(j as f64 / m as f64)).collect();
    OperatorField::new(PartitionedSpace::new(points)?, fibers)
}

fn scalar_plus_nilpotent(l: f64, phi: f64) -> CMatrix {
    let mut a = identity(2) * r(l);
    a[(0, 1)] = r(phi);
    a
}

pub fn build_example(name: ExampleName, params: &ExampleParams) -> Result<OperatorField> {
    match name {
        ExampleName::InverseSequence => {
            let n = positive(params.fibers, "fibers")?;
            let points = (1..=n).map(|i| SamplePoint::new(i.to_string(), 1.0, 2)).collect();
            let fibers = (1..=n)
                .map(|i| {
                    let i = i as f64;
                    from_real_rows(&[&[1.0 / i, 1.0], &[0.0, -1.0 / (2.0 * i)]])
                })
                .collect();
            OperatorField::new(PartitionedSpace::new(points)?, fibers)
        }
        ExampleName::UnitInterval => {
            let m = positive(params.grid, "grid")?;
            grid_field(m, |l| from_real_rows(&[&[l, 1.0], &[0.0, -l / 2.0]]))
        }
        ExampleName::ScalarPlusNilpotent | ExampleName::NilpotentOne | ExampleName::NilpotentIndicator => {
            let m = positive(params.grid, "grid")?;
            let phi = match (name, params.phi) {
                (_, Some(phi)) => phi,
                (ExampleName::NilpotentIndicator, None) => Phi::Indicator(0.0, 0.5),
                _ => Phi::Const(1.0),
            };
            grid_field(m, |l| scalar_plus_nilpotent(l, phi.eval(l)))
        }
        ExampleName::Normal => {
            let values = match (&params.values, params.samples) {
                (Some(v), _) if !v.is_empty() => v.clone(),
                (Some(_), _) => return Err(Error::BadParams("values must be nonempty".into())),
                (None, n) => {
                    let n = positive(n, "samples")?;
                    (1..=n).map(|k| k as f64 / n as f64).collect()
                }
            };
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::BadParams("values must be finite".into()));
            }
            let weight = 1.0 / values.len() as f64;
            let points = (1..=values.len()).map(|k| SamplePoint::new(k.to_string(), weight, 1)).collect();
            let fibers = values.iter().map(|&v| CMatrix::from_element(1, 1, c(v, 0.0))).collect();
            OperatorField::new(PartitionedSpace::new(points)?, fibers)
        }
        ExampleName::ConstantJordan => {
            let n = positive(params.fibers, "fibers")?;
            let points = (1..=n).map(|i| SamplePoint::new(i.to_string(), 1.0, 2)).collect();
            let fibers = (0..n).map(|_| jordan_block(2, r(0.0))).collect();
            OperatorField::new(PartitionedSpace::new(points)?, fibers)
        }
    }
}

/// Field generator indexed by the example's size parameter (point count or
/// grid size), with the remaining parameters fixed.
pub fn family_builder(name: ExampleName, base: ExampleParams) -> impl Fn(usize) -> Result<OperatorField> {
    move |size| {
        let mut p = base.clone();
        match name {
            ExampleName::InverseSequence | ExampleName::ConstantJordan => p.fibers = Some(size),
            ExampleName::Normal => {
                p.samples = Some(size);
                p.values = None;
            }
            _ => p.grid = Some(size),
        }
        build_example(name, &p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sequence_fibers() {
        let f = build_example("ex2.1".parse().unwrap(), &ExampleParams::fibers(3)).unwrap();
        let expected = [
            from_real_rows(&[&[1.0, 1.0], &[0.0, -0.5]]),
            from_real_rows(&[&[0.5, 1.0], &[0.0, -0.25]]),
            from_real_rows(&[&[1.0 / 3.0, 1.0], &[0.0, -1.0 / 6.0]]),
        ];
        assert_eq!(f.fibers(), &expected);
        assert!(f.space().points().iter().all(|p| p.weight == 1.0 && p.dim == 2));
    }

    #[test]
    fn constant_phi_grid() {
        let params = ExampleParams {
            grid: Some(4),
            phi: Some(Phi::Const(1.0)),
            ..Default::default()
        };
        let f = build_example("prop4.3".parse().unwrap(), &params).unwrap();
        for (j, a) in f.fibers().iter().enumerate() {
            let l = (j + 1) as f64 / 4.0;
            assert_eq!(*a, from_real_rows(&[&[l, 1.0], &[0.0, l]]));
        }
        assert!(f.space().points().iter().all(|p| p.weight == 0.25));
        let g = build_example(ExampleName::NilpotentOne, &ExampleParams::grid(4)).unwrap();
        assert_eq!(f.fibers(), g.fibers());
    }

    #[test]
    fn normal_values() {
        let params = ExampleParams {
            values: Some(vec![1.0, 2.0, 3.0]),
            ..Default::default()
        };
        let f = build_example(ExampleName::Normal, &params).unwrap();
        assert_eq!(f.space().len(), 3);
        assert_eq!(crate::field::assemble(&f).unwrap(), from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]));
    }

    #[test]
    fn names_and_errors() {
        assert!(matches!("ex9.9".parse::<ExampleName>(), Err(Error::UnknownExample(_))));
        for n in ExampleName::ALL {
            assert_eq!(n.as_str().parse::<ExampleName>().unwrap(), n);
        }
        assert!(matches!(
            build_example(ExampleName::InverseSequence, &ExampleParams::default()),
            Err(Error::BadParams(_))
        ));
        assert!(matches!(build_example(ExampleName::UnitInterval, &ExampleParams::grid(0)), Err(Error::BadParams(_))));
    }

    #[test]
    fn phi_grammar() {
        assert_eq!("const:2".parse::<Phi>().unwrap(), Phi::Const(2.0));
        assert_eq!("indicator:0.0,0.5".parse::<Phi>().unwrap(), Phi::Indicator(0.0, 0.5));
        assert_eq!("linear:0,1e-3".parse::<Phi>().unwrap(), Phi::Linear(0.0, 1e-3));
        for bad in ["const", "const:", "indicator:1", "indicator:1,0", "cubic:1", "linear:a,b", "const:nan"] {
            assert!(bad.parse::<Phi>().is_err(), "{bad}");
        }
        let phi = Phi::Indicator(0.0, 0.5);
        assert_eq!(phi.eval(0.5), 1.0);
        assert_eq!(phi.eval(0.51), 0.0);
        assert_eq!(phi.eval(0.0), 0.0);
        assert_eq!(Phi::Linear(1.0, 2.0).eval(0.5), 2.0);
        assert_eq!(phi.to_string().parse::<Phi>().unwrap(), phi);
    }
}
