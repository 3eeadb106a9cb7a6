//! Layered run configuration: built-in defaults, then a flat `key = value`
//! file, then individual overrides (command-line flags).

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::connect::ConnectParams;
use crate::raster::Connectivity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossCheck {
    /// Run the template detector as the second opinion for ingested detections.
    Template,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    pub connectivity: Connectivity,
    pub close_radius: usize,
    pub mask_dilation: i32,
    pub min_area: usize,
    pub band: i32,
    /// Max bind distance as a multiple of the component's longer bbox side.
    pub bind_factor: f64,
    pub iou_threshold: f64,
    pub template_threshold: f64,
    /// Symbol scale; `None` estimates it from wire width.
    pub scale: Option<u32>,
    pub cross_check: CrossCheck,
    pub assist_url: Option<String>,
    pub assist_timeout_secs: u64,
}

impl Default for Config {
    fn default() -> Self {
        let c = ConnectParams::default();
        Self {
            connectivity: c.connectivity,
            close_radius: c.close_radius,
            mask_dilation: c.mask_dilation,
            min_area: c.min_area,
            band: c.band,
            bind_factor: 1.5,
            iou_threshold: 0.5,
            template_threshold: 0.97,
            scale: None,
            cross_check: CrossCheck::Template,
            assist_url: None,
            assist_timeout_secs: 30,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
}

pub const KEYS: [&str; 12] = [
    "assist_timeout",
    "assist_url",
    "band",
    "bind_factor",
    "close_radius",
    "connectivity",
    "cross_check",
    "iou_threshold",
    "mask_dilation",
    "min_area",
    "scale",
    "template_threshold",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn bad(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue { key: key.into(), value: value.into(), reason: reason.into() }
}

fn fraction(key: &str, value: &str, lo_open: bool) -> Result<f64, ConfigError> {
    let v: f64 = parse(key, value)?;
    let ok = if lo_open { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(v)
    } else {
        Err(bad(key, value, "must be a fraction in (0, 1]"))
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "connectivity" => self.connectivity = parse(key, value)?,
            "close_radius" => self.close_radius = parse(key, value)?,
            "mask_dilation" => {
                self.mask_dilation = parse(key, value)?;
                if self.mask_dilation < 0 {
                    return Err(bad(key, value, "must be non-negative"));
                }
            }
            "min_area" => self.min_area = parse(key, value)?,
            "band" => {
                self.band = parse(key, value)?;
                if self.band < 0 {
                    return Err(bad(key, value, "must be non-negative"));
                }
            }
            "bind_factor" => {
                self.bind_factor = parse(key, value)?;
                if !(self.bind_factor > 0.0 && self.bind_factor.is_finite()) {
                    return Err(bad(key, value, "must be positive"));
                }
            }
            "iou_threshold" => self.iou_threshold = fraction(key, value, true)?,
            "template_threshold" => self.template_threshold = fraction(key, value, true)?,
            "scale" => {
                self.scale = if value == "auto" {
                    None
                } else {
                    let s: u32 = parse(key, value)?;
                    if s == 0 {
                        return Err(bad(key, value, "must be auto or at least 1"));
                    }
                    Some(s)
                }
            }
            "cross_check" => {
                self.cross_check = match value {
                    "template" => CrossCheck::Template,
                    "none" => CrossCheck::None,
                    _ => return Err(bad(key, value, "expected template or none")),
                }
            }
            "assist_url" => self.assist_url = (!value.is_empty()).then(|| value.trim_end_matches('/').to_string()),
            "assist_timeout" => {
                self.assist_timeout_secs = parse(key, value)?;
                if self.assist_timeout_secs == 0 {
                    return Err(bad(key, value, "must be at least 1 second"));
                }
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Apply a config file. `#` starts a comment; blank lines are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Defaults, then `file`, then each override in order.
    pub fn layered<'a>(file: Option<&str>, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        if let Some(text) = file {
            c.apply_text(text)?;
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn connect_params(&self) -> ConnectParams {
        ConnectParams {
            connectivity: self.connectivity,
            close_radius: self.close_radius,
            mask_dilation: self.mask_dilation,
            min_area: self.min_area,
            band: self.band,
        }
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "connectivity" => self.connectivity.to_string(),
            "close_radius" => self.close_radius.to_string(),
            "mask_dilation" => self.mask_dilation.to_string(),
            "min_area" => self.min_area.to_string(),
            "band" => self.band.to_string(),
            "bind_factor" => self.bind_factor.to_string(),
            "iou_threshold" => self.iou_threshold.to_string(),
            "template_threshold" => self.template_threshold.to_string(),
            "scale" => self.scale.map_or("auto".into(), |s| s.to_string()),
            "cross_check" => match self.cross_check {
                CrossCheck::Template => "template".into(),
                CrossCheck::None => "none".into(),
            },
            "assist_url" => self.assist_url.clone().unwrap_or_default(),
            "assist_timeout" => self.assist_timeout_secs.to_string(),
            _ => unreachable!("KEYS lists every key"),
        }
    }

    /// Effective configuration in the file format, keys sorted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.value_of(k));
        }
        out
    }

    /// Effective configuration as a sorted key/value map for reports.
    pub fn to_map(&self) -> std::collections::BTreeMap<String, String> {
        KEYS.iter().map(|k| (k.to_string(), self.value_of(k))).collect()
    }
}
