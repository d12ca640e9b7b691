use serde::Serialize;
use thiserror::Error;

/// Every grid, tolerance and budget used by the checks.
///
/// Serialized verbatim into reports, so two runs with equal configs are
/// comparable field by field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Log-spaced magnitudes `10^t`, `t = exp_min, exp_min + exp_step, …, exp_max`.
    pub grid_exp_min: f64,
    pub grid_exp_max: f64,
    pub grid_exp_step: f64,
    /// Extra seeded log-symmetric random points in the 2-D grid.
    pub random_points: usize,
    pub rng_seed: u64,
    /// Relative half-width of the excluded band around the diagonal.
    pub diag_band_rel: f64,
    /// Relative half-width of the excluded band around the non-smooth set.
    pub lambda_band_rel: f64,
    pub tol_sign: f64,
    pub tol_sym: f64,
    pub tol_pos: f64,
    pub tol_limit: f64,
    pub tol_grad: f64,
    pub tol_nec: f64,
    pub tol_nec2: f64,
    /// Maximum fraction of unusable derivative points before a check gives up.
    pub max_skip_fraction: f64,
    /// Increasing magnitudes used to probe limits at ±∞.
    pub limit_magnitudes: Vec<f64>,
    /// Increasing radii of the rings used for the gradient-decay check.
    pub grad_radii: Vec<f64>,
    /// Largest reparametrization exponent index tried.
    pub max_n: u32,
    /// Uniform step and half-width of the subadditivity grid.
    pub subadditive_step: f64,
    pub subadditive_half_width: f64,
    /// Random seed triples added to the counterexample search.
    pub search_random_seeds: usize,
    /// The counterexample search stays inside `[-search_window, search_window]`.
    pub search_window: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            grid_exp_min: -2.0,
            grid_exp_max: 3.0,
            grid_exp_step: 0.5,
            random_points: 2000,
            rng_seed: 42,
            diag_band_rel: 1e-3,
            lambda_band_rel: 1e-3,
            tol_sign: 1e-9,
            tol_sym: 1e-12,
            tol_pos: 1e-12,
            tol_limit: 1e-6,
            tol_grad: 1e-3,
            tol_nec: 1e-5,
            tol_nec2: 1e-3,
            max_skip_fraction: 0.05,
            limit_magnitudes: vec![1e3, 1e4, 1e5, 1e6],
            grad_radii: vec![1e1, 1e2, 1e3, 1e4],
            max_n: 4,
            subadditive_step: 1.0 / 300.0,
            subadditive_half_width: 5.0,
            search_random_seeds: 64,
            search_window: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(&'static str),
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s))
        .collect()
}

impl CheckConfig {
    /// Set one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "grid_exp_min" => self.grid_exp_min = num(key, value)?,
            "grid_exp_max" => self.grid_exp_max = num(key, value)?,
            "grid_exp_step" => self.grid_exp_step = num(key, value)?,
            "random_points" => self.random_points = num(key, value)?,
            "rng_seed" | "seed" => self.rng_seed = num(key, value)?,
            "diag_band_rel" => self.diag_band_rel = num(key, value)?,
            "lambda_band_rel" => self.lambda_band_rel = num(key, value)?,
            "tol_sign" => self.tol_sign = num(key, value)?,
            "tol_sym" => self.tol_sym = num(key, value)?,
            "tol_pos" => self.tol_pos = num(key, value)?,
            "tol_limit" => self.tol_limit = num(key, value)?,
            "tol_grad" => self.tol_grad = num(key, value)?,
            "tol_nec" => self.tol_nec = num(key, value)?,
            "tol_nec2" => self.tol_nec2 = num(key, value)?,
            "max_skip_fraction" => self.max_skip_fraction = num(key, value)?,
            "limit_magnitudes" => self.limit_magnitudes = list(key, value)?,
            "grad_radii" => self.grad_radii = list(key, value)?,
            "max_n" => self.max_n = num(key, value)?,
            "subadditive_step" => self.subadditive_step = num(key, value)?,
            "subadditive_half_width" => self.subadditive_half_width = num(key, value)?,
            "search_random_seeds" => self.search_random_seeds = num(key, value)?,
            "search_window" => self.search_window = num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse flat `key = value` text on top of the defaults.
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = CheckConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Malformed { line: i + 1 })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| *x > 0.0);
        if !(self.diag_band_rel > 0.0 && self.lambda_band_rel > 0.0) {
            return Err(ConfigError::Invalid("band widths must be positive"));
        }
        if !(self.grid_exp_step > 0.0 && self.grid_exp_min <= self.grid_exp_max) {
            return Err(ConfigError::Invalid("grid exponents must form a non-empty range"));
        }
        if self.limit_magnitudes.len() < 3 || !increasing(&self.limit_magnitudes) {
            return Err(ConfigError::Invalid(
                "limit_magnitudes must hold at least three increasing positive values",
            ));
        }
        if self.grad_radii.is_empty() || !increasing(&self.grad_radii) {
            return Err(ConfigError::Invalid("grad_radii must be increasing and positive"));
        }
        if !(self.subadditive_step > 0.0 && self.subadditive_half_width > 0.0) {
            return Err(ConfigError::Invalid("subadditive grid must be non-empty"));
        }
        let tols = [
            self.tol_sign,
            self.tol_sym,
            self.tol_pos,
            self.tol_limit,
            self.tol_grad,
            self.tol_nec,
            self.tol_nec2,
        ];
        if tols.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(ConfigError::Invalid("tolerances must be finite and non-negative"));
        }
        if !(self.search_window > 0.0) {
            return Err(ConfigError::Invalid("search_window must be positive"));
        }
        Ok(())
    }
}
