//! Model parameters, the free/fixed split used for identification, and the
//! `name = value` parameter file format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::SVector;

use crate::error::{Error, Result};

/// Number of parameters identified from observations.
pub const N_FREE: usize = 11;

/// Free parameters in [`FreeParameter::ALL`] order.
pub type FreeVector = SVector<f64, N_FREE>;

/// The identified parameters, in the canonical column order used by every
/// sensitivity and Jacobian matrix in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FreeParameter {
    VmaxN,
    KN,
    VmaxC,
    KC,
    MortalityD,
    QminN,
    QminC,
    MuD,
    MuM,
    ThetaD,
    ThetaM,
}

impl FreeParameter {
    pub const ALL: [FreeParameter; N_FREE] = [
        FreeParameter::VmaxN,
        FreeParameter::KN,
        FreeParameter::VmaxC,
        FreeParameter::KC,
        FreeParameter::MortalityD,
        FreeParameter::QminN,
        FreeParameter::QminC,
        FreeParameter::MuD,
        FreeParameter::MuM,
        FreeParameter::ThetaD,
        FreeParameter::ThetaM,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Key used in parameter files and CSV headers.
    pub fn name(self) -> &'static str {
        match self {
            FreeParameter::VmaxN => "V_max_N",
            FreeParameter::KN => "K_N",
            FreeParameter::VmaxC => "V_max_C",
            FreeParameter::KC => "K_C",
            FreeParameter::MortalityD => "m_D",
            FreeParameter::QminN => "Q_min_N",
            FreeParameter::QminC => "Q_min_C",
            FreeParameter::MuD => "mu_D",
            FreeParameter::MuM => "mu_M",
            FreeParameter::ThetaD => "Theta_D",
            FreeParameter::ThetaM => "Theta_M",
        }
    }
}

/// The four parameters treated as known experimental data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataParameters {
    pub a: f64,
    pub n_in: f64,
    pub c_in: f64,
    pub alpha: f64,
}

impl DataParameters {
    /// Completes the data parameters with a vector of free parameters.
    pub fn with_free(&self, free: &FreeVector) -> ParameterSet {
        ParameterSet {
            a: self.a,
            n_in: self.n_in,
            c_in: self.c_in,
            alpha: self.alpha,
            vmax_n: free[0],
            k_n: free[1],
            vmax_c: free[2],
            k_c: free[3],
            m_d: free[4],
            q_min_n: free[5],
            q_min_c: free[6],
            mu_d: free[7],
            mu_m: free[8],
            theta_d: free[9],
            theta_m: free[10],
        }
    }
}

/// All fifteen constant model parameters.
///
/// Values are expressed in the model units (µmol/L for concentrations,
/// 10⁻⁹ µmol/cell for quotas, 10⁹ cell/L for diatoms, g Xeq/L for TEP, days
/// for time). Per-cell and per-litre scale factors cancel in every product
/// of a cellular rate with `D`, so no rescaling happens anywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterSet {
    /// Chemostat dilution rate [day⁻¹].
    pub a: f64,
    /// Inlet nitrogen concentration [µmol/L].
    pub n_in: f64,
    /// Inlet carbon concentration [µmol/L].
    pub c_in: f64,
    /// Maximal nitrogen uptake rate [10⁻⁹ µmol/cell/day].
    pub vmax_n: f64,
    /// Maximal carbon uptake rate [10⁻⁹ µmol/cell/day].
    pub vmax_c: f64,
    /// Nitrogen half-saturation constant [µmol/L].
    pub k_n: f64,
    /// Carbon half-saturation constant [µmol/L].
    pub k_c: f64,
    /// Diatom mortality rate [day⁻¹]; may be zero.
    pub m_d: f64,
    /// Minimal nitrogen quota [10⁻⁹ µmol/cell].
    pub q_min_n: f64,
    /// Minimal carbon quota [10⁻⁹ µmol/cell].
    pub q_min_c: f64,
    /// Maximal division rate at infinite quota [day⁻¹].
    pub mu_d: f64,
    /// Maximal TEP release rate [10⁻⁹ g Xeq/cell/day].
    pub mu_m: f64,
    /// Maximal nitrogen consumption rate for growth [10⁻⁹ µmol/cell/day].
    pub theta_d: f64,
    /// Maximal carbon consumption rate for TEP [10⁻⁹ µmol/cell/day].
    pub theta_m: f64,
    /// C:N stoichiometric ratio.
    pub alpha: f64,
}

/// File keys in the order they are written.
pub const PARAMETER_NAMES: [&str; 15] = [
    "a", "N_in", "C_in", "V_max_N", "V_max_C", "K_N", "K_C", "m_D", "Q_min_N", "Q_min_C", "mu_D",
    "mu_M", "Theta_D", "Theta_M", "alpha",
];

impl ParameterSet {
    /// Reference diatom parameters of the target chemostat problem.
    pub const REFERENCE: ParameterSet = ParameterSet {
        a: 0.59,
        n_in: 15.0,
        c_in: 2000.0,
        vmax_n: 70.0,
        vmax_c: 400.0,
        k_n: 1.25,
        k_c: 1.5,
        m_d: 0.1,
        q_min_n: 10.0,
        q_min_c: 0.5,
        mu_d: 1.24,
        mu_m: 8.2,
        theta_d: 4.5,
        theta_m: 1000.0,
        alpha: 16.0,
    };

    pub fn free_vector(&self) -> FreeVector {
        FreeVector::from([
            self.vmax_n,
            self.k_n,
            self.vmax_c,
            self.k_c,
            self.m_d,
            self.q_min_n,
            self.q_min_c,
            self.mu_d,
            self.mu_m,
            self.theta_d,
            self.theta_m,
        ])
    }

    pub fn data(&self) -> DataParameters {
        DataParameters {
            a: self.a,
            n_in: self.n_in,
            c_in: self.c_in,
            alpha: self.alpha,
        }
    }

    pub fn with_free(&self, free: &FreeVector) -> ParameterSet {
        self.data().with_free(free)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(*self.field(name)?)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = self
            .field_mut(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown parameter `{name}`")))?;
        *slot = value;
        Ok(())
    }

    fn field(&self, name: &str) -> Option<&f64> {
        Some(match name {
            "a" => &self.a,
            "N_in" => &self.n_in,
            "C_in" => &self.c_in,
            "V_max_N" => &self.vmax_n,
            "V_max_C" => &self.vmax_c,
            "K_N" => &self.k_n,
            "K_C" => &self.k_c,
            "m_D" => &self.m_d,
            "Q_min_N" => &self.q_min_n,
            "Q_min_C" => &self.q_min_c,
            "mu_D" => &self.mu_d,
            "mu_M" => &self.mu_m,
            "Theta_D" => &self.theta_d,
            "Theta_M" => &self.theta_m,
            "alpha" => &self.alpha,
            _ => return None,
        })
    }

    fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "a" => &mut self.a,
            "N_in" => &mut self.n_in,
            "C_in" => &mut self.c_in,
            "V_max_N" => &mut self.vmax_n,
            "V_max_C" => &mut self.vmax_c,
            "K_N" => &mut self.k_n,
            "K_C" => &mut self.k_c,
            "m_D" => &mut self.m_d,
            "Q_min_N" => &mut self.q_min_n,
            "Q_min_C" => &mut self.q_min_c,
            "mu_D" => &mut self.mu_d,
            "mu_M" => &mut self.mu_m,
            "Theta_D" => &mut self.theta_d,
            "Theta_M" => &mut self.theta_m,
            "alpha" => &mut self.alpha,
            _ => return None,
        })
    }

    /// Every parameter must be finite and strictly positive, except the
    /// mortality rate which may vanish.
    pub fn validate(&self) -> Result<()> {
        for name in PARAMETER_NAMES {
            let v = self.get(name).unwrap();
            let ok = v.is_finite() && if name == "m_D" { v >= 0.0 } else { v > 0.0 };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "parameter `{name}` = {v} out of range"
                )));
            }
        }
        Ok(())
    }

    /// Parses the `name = value` format. Blank lines and `#` comments are
    /// skipped; unknown, duplicated and missing keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ParameterSet::REFERENCE;
        let mut seen = [false; PARAMETER_NAMES.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name = value`, got `{line}`")))?;
            let key = key.trim();
            let idx = PARAMETER_NAMES
                .iter()
                .position(|&n| n == key)
                .ok_or_else(|| err(format!("unknown parameter `{key}`")))?;
            if seen[idx] {
                return Err(err(format!("duplicate parameter `{key}`")));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| err(format!("bad value for `{key}`: {e}")))?;
            seen[idx] = true;
            out.set(key, value)?;
        }
        let missing: Vec<&str> = PARAMETER_NAMES
            .iter()
            .zip(seen)
            .filter(|(_, s)| !s)
            .map(|(n, _)| *n)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Parse {
                line: text.lines().count(),
                message: format!("missing parameters: {}", missing.join(", ")),
            });
        }
        Ok(out)
    }

    /// Serializes with round-trip exact float formatting.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for name in PARAMETER_NAMES {
            let _ = writeln!(s, "{name} = {:?}", self.get(name).unwrap());
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }
}

impl Default for ParameterSet {
    fn default() -> Self {
        ParameterSet::REFERENCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_order_is_stable_and_disjoint_from_data() {
        let names: Vec<_> = FreeParameter::ALL.iter().map(|p| p.name()).collect();
        assert_eq!(
            names,
            [
                "V_max_N", "K_N", "V_max_C", "K_C", "m_D", "Q_min_N", "Q_min_C", "mu_D", "mu_M",
                "Theta_D", "Theta_M"
            ]
        );
        for fixed in ["a", "N_in", "C_in", "alpha"] {
            assert!(!names.contains(&fixed));
        }
        for (i, p) in FreeParameter::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            let v = ParameterSet::REFERENCE.free_vector()[i];
            assert_eq!(ParameterSet::REFERENCE.get(p.name()), Some(v));
        }
    }

    #[test]
    fn with_free_round_trips() {
        let p = ParameterSet::REFERENCE;
        assert_eq!(p.with_free(&p.free_vector()), p);
    }

    #[test]
    fn parse_rejects_unknown_and_missing() {
        let good = ParameterSet::REFERENCE.to_file_string();
        assert_eq!(ParameterSet::parse(&good).unwrap(), ParameterSet::REFERENCE);

        let unknown = format!("{good}beta = 1\n");
        assert!(matches!(ParameterSet::parse(&unknown), Err(Error::Parse { line: 16, .. })));

        let missing: String = good.lines().filter(|l| !l.starts_with("K_C")).map(|l| format!("{l}\n")).collect();
        match ParameterSet::parse(&missing) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("K_C")),
            other => panic!("{other:?}"),
        }

        let dup = format!("{good}a = 0.5\n");
        assert!(ParameterSet::parse(&dup).is_err());
        assert!(ParameterSet::parse("a 0.59").is_err());
    }

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let text = format!("# target\n\n{}", ParameterSet::REFERENCE.to_file_string());
        assert_eq!(ParameterSet::parse(&text).unwrap(), ParameterSet::REFERENCE);
    }

    #[test]
    fn validate_allows_zero_mortality_only() {
        let mut p = ParameterSet::REFERENCE;
        p.m_d = 0.0;
        assert!(p.validate().is_ok());
        p.k_n = 0.0;
        assert!(p.validate().is_err());
        p.k_n = f64::NAN;
        assert!(p.validate().is_err());
    }
}
