//! Pipeline configuration: every calibration constant from the processing
//! modules, loadable from a flat `key = value` file with command-line
//! overrides on top.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use marginalia_core::components::Connectivity;
use marginalia_core::profile::MaskMean;
use marginalia_core::raster::BinarizeMethod;
use marginalia_core::recovery::RecoveryParams;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `otsu` or `fixed` (the latter uses `threshold`).
    pub binarize: String,
    pub threshold: u32,
    pub connectivity: u8,
    pub denoise: bool,
    pub band_fraction: f64,
    pub deskew: bool,
    /// Estimated skew below this magnitude (degrees) is left uncorrected.
    pub skew_min_correction: f64,
    /// `all` or `nonzero`: entries participating in the smoothing-window mean.
    pub mask_mean: String,
    pub min_line_run: usize,
    pub gap_factor: f64,
    pub center_factor: f64,
    pub max_page_number_run: usize,
    pub prune_gap_factor: f64,
    pub prune_size_factor: f64,
    /// Worker threads for batch/evaluate; 0 picks the machine default.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            binarize: "otsu".into(),
            threshold: 128,
            connectivity: 8,
            denoise: true,
            band_fraction: 0.08,
            deskew: true,
            skew_min_correction: 0.15,
            mask_mean: "all".into(),
            min_line_run: 3,
            gap_factor: 4.0,
            center_factor: 0.5,
            max_page_number_run: 4,
            prune_gap_factor: 4.0,
            prune_size_factor: 1.0,
            jobs: 0,
        }
    }
}

impl PipelineConfig {
    pub fn binarize_method(&self) -> Result<BinarizeMethod> {
        match self.binarize.as_str() {
            "otsu" => Ok(BinarizeMethod::Otsu),
            "fixed" => {
                if self.threshold > 255 {
                    bail!("threshold {} outside [0, 255]", self.threshold);
                }
                Ok(BinarizeMethod::Fixed(self.threshold))
            }
            other => bail!("binarize must be `otsu` or `fixed`, got `{}`", other),
        }
    }

    pub fn connectivity_value(&self) -> Result<Connectivity> {
        match self.connectivity {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => bail!("connectivity must be 4 or 8, got {}", other),
        }
    }

    pub fn mask_mean_value(&self) -> Result<MaskMean> {
        match self.mask_mean.as_str() {
            "all" => Ok(MaskMean::All),
            "nonzero" => Ok(MaskMean::NonZero),
            other => bail!("mask_mean must be `all` or `nonzero`, got `{}`", other),
        }
    }

    pub fn recovery_params(&self) -> Result<RecoveryParams> {
        Ok(RecoveryParams {
            connectivity: self.connectivity_value()?,
            min_line_run: self.min_line_run,
            gap_factor: self.gap_factor,
            center_factor: self.center_factor,
            max_page_number_run: self.max_page_number_run,
            prune_gap_factor: self.prune_gap_factor,
            prune_size_factor: self.prune_size_factor,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.binarize_method()?;
        self.connectivity_value()?;
        self.mask_mean_value()?;
        if !(self.band_fraction > 0.0 && self.band_fraction <= 0.25) {
            bail!("band_fraction {} outside (0, 0.25]", self.band_fraction);
        }
        if self.min_line_run == 0 {
            bail!("min_line_run must be at least 1");
        }
        if self.gap_factor < 0.0 || self.prune_gap_factor < 0.0 || self.center_factor < 0.0 {
            bail!("gap/center factors must be non-negative");
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "binarize" => self.binarize = v.to_string(),
            "threshold" => self.threshold = v.parse().context("threshold")?,
            "connectivity" => self.connectivity = v.parse().context("connectivity")?,
            "denoise" => self.denoise = parse_bool(v)?,
            "band_fraction" => self.band_fraction = v.parse().context("band_fraction")?,
            "deskew" => self.deskew = parse_bool(v)?,
            "skew_min_correction" => {
                self.skew_min_correction = v.parse().context("skew_min_correction")?
            }
            "mask_mean" => self.mask_mean = v.to_string(),
            "min_line_run" => self.min_line_run = v.parse().context("min_line_run")?,
            "gap_factor" => self.gap_factor = v.parse().context("gap_factor")?,
            "center_factor" => self.center_factor = v.parse().context("center_factor")?,
            "max_page_number_run" => {
                self.max_page_number_run = v.parse().context("max_page_number_run")?
            }
            "prune_gap_factor" => self.prune_gap_factor = v.parse().context("prune_gap_factor")?,
            "prune_size_factor" => {
                self.prune_size_factor = v.parse().context("prune_size_factor")?
            }
            "jobs" => self.jobs = v.parse().context("jobs")?,
            other => bail!("unknown config key `{}`", other),
        }
        Ok(())
    }

    /// Parses a flat config file: one `key = value` per line, `#` comments.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config = PipelineConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').with_context(|| {
                format!("{}:{}: expected key = value", path.display(), lineno + 1)
            })?;
            config
                .set(key, value)
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Renders the full configuration in config-file syntax.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "binarize = {}", self.binarize);
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "connectivity = {}", self.connectivity);
        let _ = writeln!(out, "denoise = {}", self.denoise);
        let _ = writeln!(out, "band_fraction = {}", self.band_fraction);
        let _ = writeln!(out, "deskew = {}", self.deskew);
        let _ = writeln!(out, "skew_min_correction = {}", self.skew_min_correction);
        let _ = writeln!(out, "mask_mean = {}", self.mask_mean);
        let _ = writeln!(out, "min_line_run = {}", self.min_line_run);
        let _ = writeln!(out, "gap_factor = {}", self.gap_factor);
        let _ = writeln!(out, "center_factor = {}", self.center_factor);
        let _ = writeln!(out, "max_page_number_run = {}", self.max_page_number_run);
        let _ = writeln!(out, "prune_gap_factor = {}", self.prune_gap_factor);
        let _ = writeln!(out, "prune_size_factor = {}", self.prune_size_factor);
        let _ = writeln!(out, "jobs = {}", self.jobs);
        out
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => bail!("expected boolean, got `{}`", other),
    }
}
