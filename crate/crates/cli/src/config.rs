//! Run configuration, read from a TOML file.
//!
//! Top-level keys describe the spin model and the sampling grid; an optional
//! `[link]` table describes the network link. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use g4v_core::g4v::{coupling_rate, ModelConstants};
use g4v_core::link::{DetectorModel, Encoding, LinkConfig, DEFAULT_ALPHA_DB_PER_KM, DEFAULT_C_MEDIUM};
use g4v_core::scan::Horizon;
use serde_json::{json, Value};
use toml::Table;

use crate::CliError;

const TOP_KEYS: &[&str] = &[
    "delta_hz",
    "temperature_k",
    "g0chi0",
    "gamma_s_inv",
    "omega_a_prime_rad_s",
    "t_max_s",
    "t_max_coherence_times",
    "n_samples",
    "output_path",
    "link",
];

const LINK_KEYS: &[&str] = &[
    "encoding",
    "length_km",
    "marked_length_km",
    "alpha_db_per_km",
    "c_medium_m_s",
    "dark_count_prob",
    "visibility",
    "detector",
];

/// How the spin-phonon coupling is specified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    G0Chi0(f64),
    Gamma(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkSection {
    pub encodings: Vec<Encoding>,
    pub lengths_km: Vec<f64>,
    /// Lengths at which the density matrices are written out.
    pub marked_lengths_km: Vec<f64>,
    pub alpha_db_per_km: f64,
    pub c_medium_m_s: f64,
    pub dark_count_prob: f64,
    pub visibility: f64,
    pub detector: DetectorModel,
}

impl LinkSection {
    pub fn template(&self, encoding: Encoding) -> LinkConfig {
        let mut cfg = LinkConfig::new(0.0, encoding);
        cfg.alpha_db_per_km = self.alpha_db_per_km;
        cfg.c_medium = self.c_medium_m_s;
        cfg.dark_count_prob = self.dark_count_prob;
        cfg.visibility = self.visibility;
        cfg.detector = self.detector;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub delta_hz: f64,
    pub temperatures_k: Vec<f64>,
    pub coupling: Coupling,
    pub omega_a_prime_rad_s: Option<f64>,
    pub horizon: Option<Horizon>,
    pub n_samples: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub link: Option<LinkSection>,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn check_keys(table: &Table, allowed: &[&str], prefix: &str) -> Result<(), CliError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::Config(format!("unknown key {prefix}{key}")));
        }
    }
    Ok(())
}

fn number(v: &toml::Value, key: &str) -> Result<f64, CliError> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(bad(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn opt_number(t: &Table, key: &str) -> Result<Option<f64>, CliError> {
    t.get(key).map(|v| number(v, key)).transpose()
}

fn numbers(t: &Table, key: &str) -> Result<Option<Vec<f64>>, CliError> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Array(items)) => {
            if items.is_empty() {
                return Err(bad(key, "must not be empty"));
            }
            items.iter().map(|v| number(v, key)).collect::<Result<Vec<_>, _>>().map(Some)
        }
        Some(v) => Ok(Some(vec![number(v, key)?])),
    }
}

fn strings(t: &Table, key: &str) -> Result<Option<Vec<String>>, CliError> {
    let one = |v: &toml::Value| match v {
        toml::Value::String(s) => Ok(s.clone()),
        other => Err(bad(key, format!("expected a string, got {}", other.type_str()))),
    };
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Array(items)) => {
            if items.is_empty() {
                return Err(bad(key, "must not be empty"));
            }
            items.iter().map(one).collect::<Result<Vec<_>, _>>().map(Some)
        }
        Some(v) => Ok(Some(vec![one(v)?])),
    }
}

fn positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, format!("must be finite and > 0, got {x}")))
    }
}

fn non_negative(key: &str, x: f64) -> Result<f64, CliError> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, format!("must be finite and >= 0, got {x}")))
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(format!("malformed config: {e}")))?;
        check_keys(&table, TOP_KEYS, "")?;

        let delta_hz = positive(
            "delta_hz",
            opt_number(&table, "delta_hz")?.ok_or_else(|| bad("delta_hz", "missing"))?,
        )?;
        let temperatures_k = numbers(&table, "temperature_k")?.ok_or_else(|| bad("temperature_k", "missing"))?;
        for &t in &temperatures_k {
            positive("temperature_k", t)?;
        }

        let coupling = match (opt_number(&table, "g0chi0")?, opt_number(&table, "gamma_s_inv")?) {
            (Some(g), None) => Coupling::G0Chi0(non_negative("g0chi0", g)?),
            (None, Some(g)) => Coupling::Gamma(non_negative("gamma_s_inv", g)?),
            (Some(_), Some(_)) => return Err(bad("g0chi0", "give exactly one of g0chi0 and gamma_s_inv, not both")),
            (None, None) => return Err(bad("gamma_s_inv", "missing (give exactly one of g0chi0 and gamma_s_inv)")),
        };

        let omega_a_prime_rad_s = opt_number(&table, "omega_a_prime_rad_s")?
            .map(|w| {
                if w.is_finite() {
                    Ok(w)
                } else {
                    Err(bad("omega_a_prime_rad_s", "must be finite"))
                }
            })
            .transpose()?;

        let horizon = match (opt_number(&table, "t_max_s")?, opt_number(&table, "t_max_coherence_times")?) {
            (Some(t), None) => Some(Horizon::Fixed(positive("t_max_s", t)?)),
            (None, Some(k)) => Some(Horizon::CoherenceTimes(positive("t_max_coherence_times", k)?)),
            (Some(_), Some(_)) => return Err(bad("t_max_s", "give at most one of t_max_s and t_max_coherence_times")),
            (None, None) => None,
        };

        let n_samples = match table.get("n_samples") {
            None => None,
            Some(toml::Value::Integer(n)) if *n >= 3 => Some(*n as usize),
            Some(toml::Value::Integer(n)) => return Err(bad("n_samples", format!("must be >= 3, got {n}"))),
            Some(other) => return Err(bad("n_samples", format!("expected an integer, got {}", other.type_str()))),
        };

        let output_path = match table.get("output_path") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return Err(bad("output_path", format!("expected a string, got {}", other.type_str()))),
        };

        let link = match table.get("link") {
            None => None,
            Some(toml::Value::Table(t)) => Some(parse_link(t)?),
            Some(other) => return Err(bad("link", format!("expected a table, got {}", other.type_str()))),
        };

        Ok(Self {
            delta_hz,
            temperatures_k,
            coupling,
            omega_a_prime_rad_s,
            horizon,
            n_samples,
            output_path,
            link,
        })
    }

    /// Model constants at every temperature, in grid order.
    pub fn constants(&self) -> Result<Vec<ModelConstants>, CliError> {
        self.temperatures_k
            .iter()
            .map(|&t| {
                let k = match self.coupling {
                    Coupling::G0Chi0(g) => ModelConstants::new(self.delta_hz, t, g),
                    Coupling::Gamma(g) => ModelConstants::from_gamma(self.delta_hz, t, g),
                }
                .map_err(|e| CliError::Config(format!("temperature_k = {t}: {e}")))?;
                Ok(match self.omega_a_prime_rad_s {
                    Some(w) => k.with_omega_a_prime(w),
                    None => k,
                })
            })
            .collect()
    }

    pub fn sampling(&self, command: &str) -> Result<(Horizon, usize), CliError> {
        let horizon = self.horizon.ok_or_else(|| {
            bad(
                "t_max_s",
                format!("missing (required by {command}; or give t_max_coherence_times)"),
            )
        })?;
        let n = self
            .n_samples
            .ok_or_else(|| bad("n_samples", format!("missing (required by {command})")))?;
        Ok((horizon, n))
    }

    pub fn link(&self) -> Result<&LinkSection, CliError> {
        self.link
            .as_ref()
            .ok_or_else(|| bad("link", "missing [link] section (required by link-sweep)"))
    }

    /// Every setting after defaults are filled in, for the CSV comment line.
    pub fn resolved(&self, command: &str) -> Result<Value, CliError> {
        let gamma = match self.coupling {
            Coupling::G0Chi0(g) => coupling_rate(g, self.delta_hz).map_err(|e| bad("g0chi0", e))?,
            Coupling::Gamma(g) => g,
        };
        let g0chi0 = match self.coupling {
            Coupling::G0Chi0(g) => Some(g),
            Coupling::Gamma(_) => None,
        };
        let (t_max_s, t_max_coherence_times) = match self.horizon {
            Some(Horizon::Fixed(t)) => (Some(t), None),
            Some(Horizon::CoherenceTimes(k)) => (None, Some(k)),
            None => (None, None),
        };
        let link = self.link.as_ref().map(|l| {
            json!({
                "encoding": l.encodings.iter().map(|e| e.name()).collect::<Vec<_>>(),
                "length_km": l.lengths_km,
                "marked_length_km": l.marked_lengths_km,
                "alpha_db_per_km": l.alpha_db_per_km,
                "c_medium_m_s": l.c_medium_m_s,
                "dark_count_prob": l.dark_count_prob,
                "visibility": l.visibility,
                "detector": l.detector.name(),
            })
        });
        Ok(json!({
            "command": command,
            "delta_hz": self.delta_hz,
            "temperature_k": self.temperatures_k,
            "g0chi0": g0chi0,
            "gamma_s_inv": gamma,
            "omega_a_prime_rad_s": self.omega_a_prime_rad_s.unwrap_or(std::f64::consts::TAU * self.delta_hz),
            "t_max_s": t_max_s,
            "t_max_coherence_times": t_max_coherence_times,
            "n_samples": self.n_samples,
            "link": link,
        }))
    }
}

fn parse_link(t: &Table) -> Result<LinkSection, CliError> {
    check_keys(t, LINK_KEYS, "link.")?;
    let encodings = strings(t, "encoding")?
        .ok_or_else(|| bad("link.encoding", "missing"))?
        .iter()
        .map(|s| s.parse::<Encoding>().map_err(|e| bad("link.encoding", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let lengths_km = numbers(t, "length_km")?.ok_or_else(|| bad("link.length_km", "missing"))?;
    for &l in &lengths_km {
        non_negative("link.length_km", l)?;
    }
    let marked_lengths_km = match numbers(t, "marked_length_km")? {
        Some(m) => {
            for l in &m {
                if !lengths_km.contains(l) {
                    return Err(bad("link.marked_length_km", format!("{l} is not one of link.length_km")));
                }
            }
            m
        }
        None => vec![*lengths_km.last().expect("non-empty")],
    };
    let detector = match strings(t, "detector")? {
        None => DetectorModel::default(),
        Some(v) if v.len() == 1 => v[0].parse().map_err(|e| bad("link.detector", e))?,
        Some(_) => return Err(bad("link.detector", "expected a single string")),
    };
    let dark_count_prob = opt_number(t, "dark_count_prob")?.unwrap_or(0.0);
    if !(0.0..1.0).contains(&dark_count_prob) {
        return Err(bad(
            "link.dark_count_prob",
            format!("must lie in [0, 1), got {dark_count_prob}"),
        ));
    }
    let visibility = opt_number(t, "visibility")?.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&visibility) {
        return Err(bad("link.visibility", format!("must lie in [0, 1], got {visibility}")));
    }
    Ok(LinkSection {
        encodings,
        lengths_km,
        marked_lengths_km,
        alpha_db_per_km: non_negative(
            "link.alpha_db_per_km",
            opt_number(t, "alpha_db_per_km")?.unwrap_or(DEFAULT_ALPHA_DB_PER_KM),
        )?,
        c_medium_m_s: positive(
            "link.c_medium_m_s",
            opt_number(t, "c_medium_m_s")?.unwrap_or(DEFAULT_C_MEDIUM),
        )?,
        dark_count_prob,
        visibility,
        detector,
    })
}
