//! TOML configuration: a flat, sectioned key-value document.
//!
//! Every key is optional and falls back to the reference machine defaults;
//! unknown keys are a hard error naming the key. Geometry may be given in
//! millimetres through `*_mm` variants (`r_mm = 8.0` instead of
//! `r = 0.008`); everything is SI internally.
//!
//! ```toml
//! [gantry]
//! m6 = 0.611
//! r_mm = 8.0
//!
//! [tmd]
//! m7 = 0.5
//! k7 = 100.0
//! beta7 = 0.5
//!
//! [limits]
//! a_print = 300.0     # mm/s^2
//! v_print = 150.0     # mm/s
//! distance = 180.0    # mm
//!
//! [sim]
//! dt = 1e-5
//! method = "rk4"
//!
//! [output]
//! dir = "out"
//!
//! [[doe]]
//! label = "custom case"
//! m7 = 0.1
//! k7 = 80.0
//! beta7 = 0.3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{DoeCase, DoePlan};
use crate::error::{Error, Result};
use crate::integrator::{Method, SimConfig};
use crate::motion::KinematicLimits;
use crate::params::{validate_params, GantryParams, TmdParams};

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub gantry: GantryParams,
    /// Damper on the carriage; `None` simulates the bare 12-state machine.
    pub tmd: Option<TmdParams>,
    pub limits: KinematicLimits,
    pub sim: SimConfig,
    pub doe: DoePlan,
    pub output_dir: PathBuf,
}

impl Default for Config {
    /// Reference machine, reference move, and the damper parameters that
    /// performed best in the standard nine-case study.
    fn default() -> Self {
        Config {
            gantry: GantryParams::default(),
            tmd: Some(TmdParams::new(0.5, 100.0, 0.5)),
            limits: KinematicLimits::default(),
            sim: SimConfig::default(),
            doe: DoePlan::standard(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl Config {
    /// Parse a TOML document, apply defaults, and validate the result.
    pub fn from_toml(text: &str) -> Result<Config> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        Config::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml(&text)
    }

    /// Serialize back to TOML. Loading the output reproduces this config
    /// exactly.
    pub fn to_toml(&self) -> String {
        let raw = RawConfig::from(self);
        toml::to_string_pretty(&raw).expect("config serializes")
    }

    /// One-way carriage travel (m) implied by the motion limits.
    pub fn travel_m(&self) -> f64 {
        self.limits.travel_m()
    }

    pub fn validate(&self) -> Result<()> {
        validate_params(&self.gantry, self.travel_m()).into_result()?;
        if let Some(tmd) = &self.tmd {
            tmd.validate()?;
        }
        self.limits.validate()?;
        self.sim.validate()?;
        self.doe.validate()?;
        Ok(())
    }

    fn from_raw(raw: RawConfig) -> Result<Config> {
        let defaults = Config::default();
        let gantry = raw
            .gantry
            .map(|g| g.resolve(defaults.gantry))
            .transpose()?
            .unwrap_or(defaults.gantry);
        let tmd = match raw.tmd {
            None => defaults.tmd,
            Some(t) => t.resolve()?,
        };
        let limits = raw
            .limits
            .map(|l| l.resolve(defaults.limits))
            .unwrap_or(defaults.limits);
        let sim = raw
            .sim
            .map(|s| s.resolve(defaults.sim))
            .transpose()?
            .unwrap_or(defaults.sim);
        let doe = match raw.doe {
            None => defaults.doe,
            Some(cases) => DoePlan {
                cases: cases
                    .into_iter()
                    .map(|c| DoeCase {
                        label: c.label,
                        tmd: TmdParams::new(c.m7, c.k7, c.beta7),
                    })
                    .collect(),
            },
        };
        let output_dir = raw
            .output
            .and_then(|o| o.dir)
            .map(PathBuf::from)
            .unwrap_or(defaults.output_dir);

        let config = Config {
            gantry,
            tmd,
            limits,
            sim,
            doe,
            output_dir,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    gantry: Option<RawGantry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tmd: Option<RawTmd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limits: Option<RawLimits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sim: Option<RawSim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<RawOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    doe: Option<Vec<RawDoeCase>>,
}

impl From<&Config> for RawConfig {
    fn from(c: &Config) -> Self {
        RawConfig {
            gantry: Some(RawGantry::from(&c.gantry)),
            tmd: Some(match &c.tmd {
                Some(t) => RawTmd {
                    attached: None,
                    m7: Some(t.m7),
                    k7: Some(t.k7),
                    beta7: Some(t.beta7),
                },
                None => RawTmd {
                    attached: Some(false),
                    m7: None,
                    k7: None,
                    beta7: None,
                },
            }),
            limits: Some(RawLimits {
                a_max: Some(c.limits.a_max),
                a_print: Some(c.limits.a_print),
                v_print: Some(c.limits.v_print),
                jerk: Some(c.limits.jerk),
                distance: Some(c.limits.distance),
                z_hop_time: Some(c.limits.z_hop_time),
            }),
            sim: Some(RawSim {
                dt: Some(c.sim.dt),
                t_end: c.sim.t_end,
                method: Some(c.sim.method.as_str().to_string()),
                rel_tol: Some(c.sim.rel_tol),
                abs_tol: Some(c.sim.abs_tol),
                output_stride: Some(c.sim.output_stride),
            }),
            output: Some(RawOutput {
                dir: Some(c.output_dir.to_string_lossy().into_owned()),
            }),
            doe: Some(
                c.doe
                    .cases
                    .iter()
                    .map(|case| RawDoeCase {
                        label: case.label.clone(),
                        m7: case.tmd.m7,
                        k7: case.tmd.k7,
                        beta7: case.tmd.beta7,
                    })
                    .collect(),
            ),
        }
    }
}

macro_rules! pick_length {
    ($name:literal, $plain:expr, $mm:expr, $default:expr) => {
        match ($plain, $mm) {
            (Some(_), Some(_)) => {
                return Err(Error::ConfigValue(format!(
                    "give either {0} or {0}_mm, not both",
                    $name
                )))
            }
            (Some(v), None) => v,
            (None, Some(mm)) => mm / 1000.0,
            (None, None) => $default,
        }
    };
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGantry {
    m1: Option<f64>,
    m2: Option<f64>,
    m3: Option<f64>,
    m4: Option<f64>,
    m5: Option<f64>,
    m6: Option<f64>,
    k1: Option<f64>,
    k2: Option<f64>,
    k3: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    beta3: Option<f64>,
    beta4: Option<f64>,
    beta5: Option<f64>,
    beta6: Option<f64>,
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_mm: Option<f64>,
    l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l1_mm: Option<f64>,
    l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l2_mm: Option<f64>,
    l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_mm: Option<f64>,
    l0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l0_mm: Option<f64>,
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b_mm: Option<f64>,
    csp: Option<f64>,
    fpl: Option<f64>,
}

impl RawGantry {
    fn resolve(self, d: GantryParams) -> Result<GantryParams> {
        Ok(GantryParams {
            m1: self.m1.unwrap_or(d.m1),
            m2: self.m2.unwrap_or(d.m2),
            m3: self.m3.unwrap_or(d.m3),
            m4: self.m4.unwrap_or(d.m4),
            m5: self.m5.unwrap_or(d.m5),
            m6: self.m6.unwrap_or(d.m6),
            k1: self.k1.unwrap_or(d.k1),
            k2: self.k2.unwrap_or(d.k2),
            k3: self.k3.unwrap_or(d.k3),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            beta3: self.beta3.unwrap_or(d.beta3),
            beta4: self.beta4.unwrap_or(d.beta4),
            beta5: self.beta5.unwrap_or(d.beta5),
            beta6: self.beta6.unwrap_or(d.beta6),
            r: pick_length!("r", self.r, self.r_mm, d.r),
            l1: pick_length!("l1", self.l1, self.l1_mm, d.l1),
            l2: pick_length!("l2", self.l2, self.l2_mm, d.l2),
            l: pick_length!("l", self.l, self.l_mm, d.l),
            l0: pick_length!("l0", self.l0, self.l0_mm, d.l0),
            b: pick_length!("b", self.b, self.b_mm, d.b),
            csp: self.csp.unwrap_or(d.csp),
            fpl: self.fpl.unwrap_or(d.fpl),
        })
    }
}

impl From<&GantryParams> for RawGantry {
    fn from(g: &GantryParams) -> Self {
        RawGantry {
            m1: Some(g.m1),
            m2: Some(g.m2),
            m3: Some(g.m3),
            m4: Some(g.m4),
            m5: Some(g.m5),
            m6: Some(g.m6),
            k1: Some(g.k1),
            k2: Some(g.k2),
            k3: Some(g.k3),
            beta1: Some(g.beta1),
            beta2: Some(g.beta2),
            beta3: Some(g.beta3),
            beta4: Some(g.beta4),
            beta5: Some(g.beta5),
            beta6: Some(g.beta6),
            r: Some(g.r),
            r_mm: None,
            l1: Some(g.l1),
            l1_mm: None,
            l2: Some(g.l2),
            l2_mm: None,
            l: Some(g.l),
            l_mm: None,
            l0: Some(g.l0),
            l0_mm: None,
            b: Some(g.b),
            b_mm: None,
            csp: Some(g.csp),
            fpl: Some(g.fpl),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTmd {
    /// `attached = false` removes the damper entirely.
    #[serde(skip_serializing_if = "Option::is_none")]
    attached: Option<bool>,
    m7: Option<f64>,
    k7: Option<f64>,
    beta7: Option<f64>,
}

impl RawTmd {
    fn resolve(self) -> Result<Option<TmdParams>> {
        if self.attached == Some(false) {
            if self.m7.is_some() || self.k7.is_some() || self.beta7.is_some() {
                return Err(Error::ConfigValue(
                    "tmd.attached = false conflicts with damper parameters".into(),
                ));
            }
            return Ok(None);
        }
        let d = Config::default().tmd.expect("default damper exists");
        Ok(Some(TmdParams::new(
            self.m7.unwrap_or(d.m7),
            self.k7.unwrap_or(d.k7),
            self.beta7.unwrap_or(d.beta7),
        )))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    a_max: Option<f64>,
    a_print: Option<f64>,
    v_print: Option<f64>,
    jerk: Option<f64>,
    distance: Option<f64>,
    z_hop_time: Option<f64>,
}

impl RawLimits {
    fn resolve(self, d: KinematicLimits) -> KinematicLimits {
        KinematicLimits {
            a_max: self.a_max.unwrap_or(d.a_max),
            a_print: self.a_print.unwrap_or(d.a_print),
            v_print: self.v_print.unwrap_or(d.v_print),
            jerk: self.jerk.unwrap_or(d.jerk),
            distance: self.distance.unwrap_or(d.distance),
            z_hop_time: self.z_hop_time.unwrap_or(d.z_hop_time),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    method: Option<String>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    output_stride: Option<usize>,
}

impl RawSim {
    fn resolve(self, d: SimConfig) -> Result<SimConfig> {
        let method = match self.method {
            None => d.method,
            Some(s) => s.parse::<Method>()?,
        };
        Ok(SimConfig {
            dt: self.dt.unwrap_or(d.dt),
            t_end: self.t_end.or(d.t_end),
            method,
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            output_stride: self.output_stride.unwrap_or(d.output_stride),
        })
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoeCase {
    label: String,
    m7: f64,
    k7: f64,
    beta7: f64,
}
