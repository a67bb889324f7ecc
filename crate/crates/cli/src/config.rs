//! Plain-text run configuration: line-oriented `key = value` pairs under
//! `[section]` headers, `#` comments, strict typing. The same format is
//! written back as the run manifest, so `parse(render(config)) == config`
//! and any output is reproducible from its manifest alone.

use std::collections::HashSet;
use std::fmt;

/// Tool version recorded in manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), key: Some(key.into()), message: message.into() }
    }

    fn for_key(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { line: None, key: Some(key.into()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        if let Some(key) = &self.key {
            write!(f, " [{key}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Transfer,
    SweepLength,
    ScanT,
    CompareModels,
    DarkCheck,
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "transfer" => Some(Protocol::Transfer),
            "sweep-length" => Some(Protocol::SweepLength),
            "scan-T" | "scan-t" => Some(Protocol::ScanT),
            "compare-models" => Some(Protocol::CompareModels),
            "dark-check" => Some(Protocol::DarkCheck),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Transfer => "transfer",
            Protocol::SweepLength => "sweep-length",
            Protocol::ScanT => "scan-T",
            Protocol::CompareModels => "compare-models",
            Protocol::DarkCheck => "dark-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Eliminated,
    Full,
}

impl ModelChoice {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "eliminated" => Some(ModelChoice::Eliminated),
            "full" => Some(ModelChoice::Full),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ModelChoice::Eliminated => "eliminated",
            ModelChoice::Full => "full",
        }
    }
}

/// Fibre half-width: chosen automatically from the coupling bandwidth
/// (with doubling refinement) or pinned to a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(u32),
}

impl fmt::Display for KChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KChoice::Auto => write!(f, "auto"),
            KChoice::Fixed(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub protocol: Protocol,
    pub model: ModelChoice,
    pub t_total: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub seed: u64,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub delta_g: f64,
    pub delta_r: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub g_a: f64,
    pub g_b: f64,
    pub length: f64,
    pub delta0: f64,
    pub k: KChoice,
    pub compensate_light_shift: bool,
    pub include_s11_shift: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSection {
    pub c_a: f64,
    pub c_b: f64,
    pub width_frac: f64,
    /// `(t_a - t_b)/T`; positive puts node B first. A negative value runs
    /// the reversed ordering deliberately (a warning is emitted).
    pub offset_frac: f64,
    pub center_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSection {
    pub steps_exponent: u32,
    pub samples: usize,
    pub fidelity_tol: f64,
    pub max_halvings: u32,
    pub k_tol: f64,
    pub max_k_doublings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub lengths: Vec<f64>,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaSection {
    pub version: String,
}

/// Fully resolved run configuration. Defaults reproduce the reference
/// operating point: drive peaks of 2 rate units, `kappa = 0.1`,
/// `delta0 = 0.1`, `T = 300`, widths `0.2 T`, offset `0.2 T` and the
/// standard length grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSection,
    pub model: ModelSection,
    pub pulses: PulseSection,
    pub integrator: IntegratorSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
    pub meta: MetaSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection {
                protocol: Protocol::Transfer,
                model: ModelChoice::Eliminated,
                t_total: 300.0,
                alpha_re: 1.0,
                alpha_im: 0.0,
                beta_re: 0.0,
                beta_im: 0.0,
                seed: 7,
                draws: 100,
            },
            model: ModelSection {
                delta_g: 0.0,
                delta_r: 0.0,
                gamma: 0.0,
                kappa: 0.1,
                g_a: 0.0,
                g_b: 0.0,
                length: 1.0,
                delta0: 0.1,
                k: KChoice::Auto,
                compensate_light_shift: true,
                include_s11_shift: false,
            },
            pulses: PulseSection {
                c_a: 2.0,
                c_b: 2.0,
                width_frac: 0.2,
                offset_frac: 0.2,
                center_frac: 0.5,
            },
            integrator: IntegratorSection {
                steps_exponent: 15,
                samples: 1024,
                fidelity_tol: 1e-6,
                max_halvings: 3,
                k_tol: 1e-4,
                max_k_doublings: 2,
            },
            sweep: SweepSection {
                lengths: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
                times: vec![300.0, 600.0, 1200.0],
            },
            output: OutputSection { dir: "out".to_string() },
            meta: MetaSection { version: VERSION.to_string() },
        }
    }
}

fn parse_f64(line: usize, key: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = raw
        .parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a number, got `{raw}`")))?;
    if !v.is_finite() {
        return Err(ConfigError::at(line, key, "number must be finite"));
    }
    Ok(v)
}

fn parse_u32(line: usize, key: &str, raw: &str) -> Result<u32, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a non-negative integer, got `{raw}`")))
}

fn parse_u64(line: usize, key: &str, raw: &str) -> Result<u64, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a non-negative integer, got `{raw}`")))
}

fn parse_usize(line: usize, key: &str, raw: &str) -> Result<usize, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError::at(line, key, format!("expected a non-negative integer, got `{raw}`")))
}

fn parse_bool(line: usize, key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::at(line, key, format!("expected true or false, got `{raw}`"))),
    }
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',')
        .map(|item| parse_f64(line, key, item.trim()))
        .collect()
}

fn parse_k(line: usize, key: &str, raw: &str) -> Result<KChoice, ConfigError> {
    if raw == "auto" {
        Ok(KChoice::Auto)
    } else {
        Ok(KChoice::Fixed(parse_u32(line, key, raw)?))
    }
}

/// Parses a configuration. Unknown keys are warnings by default and errors
/// in strict mode; duplicate keys are last-wins with a warning. An empty
/// input yields the full default configuration.
pub fn parse_config(text: &str, strict: bool) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let mut config = RunConfig::default();
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut section = String::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line_no, line, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::at(line_no, line, "expected `key = value` or `[section]`")
        })?;
        let key = key.trim();
        let value = value.trim();
        let qualified = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };

        if !seen.insert(qualified.clone()) {
            warnings.push(format!("line {line_no}: duplicate key `{qualified}` (last value wins)"));
        }

        let mut unknown = false;
        match qualified.as_str() {
            "run.protocol" => {
                config.run.protocol = Protocol::parse(value).ok_or_else(|| {
                    ConfigError::at(line_no, &qualified, format!("unknown protocol `{value}`"))
                })?;
            }
            "run.model" => {
                config.run.model = ModelChoice::parse(value).ok_or_else(|| {
                    ConfigError::at(line_no, &qualified, format!("unknown model `{value}`"))
                })?;
            }
            "run.T" => config.run.t_total = parse_f64(line_no, &qualified, value)?,
            "run.alpha_re" => config.run.alpha_re = parse_f64(line_no, &qualified, value)?,
            "run.alpha_im" => config.run.alpha_im = parse_f64(line_no, &qualified, value)?,
            "run.beta_re" => config.run.beta_re = parse_f64(line_no, &qualified, value)?,
            "run.beta_im" => config.run.beta_im = parse_f64(line_no, &qualified, value)?,
            "run.seed" => config.run.seed = parse_u64(line_no, &qualified, value)?,
            "run.draws" => config.run.draws = parse_usize(line_no, &qualified, value)?,

            "model.delta_g" => config.model.delta_g = parse_f64(line_no, &qualified, value)?,
            "model.delta_r" => config.model.delta_r = parse_f64(line_no, &qualified, value)?,
            "model.gamma" => config.model.gamma = parse_f64(line_no, &qualified, value)?,
            "model.kappa" => config.model.kappa = parse_f64(line_no, &qualified, value)?,
            "model.g_a" => config.model.g_a = parse_f64(line_no, &qualified, value)?,
            "model.g_b" => config.model.g_b = parse_f64(line_no, &qualified, value)?,
            "model.L" => config.model.length = parse_f64(line_no, &qualified, value)?,
            "model.delta0" => config.model.delta0 = parse_f64(line_no, &qualified, value)?,
            "model.K" => config.model.k = parse_k(line_no, &qualified, value)?,
            "model.compensate_light_shift" => {
                config.model.compensate_light_shift = parse_bool(line_no, &qualified, value)?
            }
            "model.include_s11_shift" => {
                config.model.include_s11_shift = parse_bool(line_no, &qualified, value)?
            }

            "pulses.c_a" => config.pulses.c_a = parse_f64(line_no, &qualified, value)?,
            "pulses.c_b" => config.pulses.c_b = parse_f64(line_no, &qualified, value)?,
            "pulses.width_frac" => config.pulses.width_frac = parse_f64(line_no, &qualified, value)?,
            "pulses.offset_frac" => config.pulses.offset_frac = parse_f64(line_no, &qualified, value)?,
            "pulses.center_frac" => config.pulses.center_frac = parse_f64(line_no, &qualified, value)?,

            "integrator.steps_exponent" => {
                config.integrator.steps_exponent = parse_u32(line_no, &qualified, value)?
            }
            "integrator.samples" => config.integrator.samples = parse_usize(line_no, &qualified, value)?,
            "integrator.fidelity_tol" => {
                config.integrator.fidelity_tol = parse_f64(line_no, &qualified, value)?
            }
            "integrator.max_halvings" => {
                config.integrator.max_halvings = parse_u32(line_no, &qualified, value)?
            }
            "integrator.k_tol" => config.integrator.k_tol = parse_f64(line_no, &qualified, value)?,
            "integrator.max_k_doublings" => {
                config.integrator.max_k_doublings = parse_u32(line_no, &qualified, value)?
            }

            "sweep.lengths" => config.sweep.lengths = parse_list(line_no, &qualified, value)?,
            "sweep.times" => config.sweep.times = parse_list(line_no, &qualified, value)?,

            "output.dir" => config.output.dir = value.to_string(),

            "meta.version" => config.meta.version = value.to_string(),

            _ => unknown = true,
        }
        if unknown {
            if strict {
                return Err(ConfigError::at(line_no, &qualified, "unknown key"));
            }
            warnings.push(format!("line {line_no}: unknown key `{qualified}` (ignored)"));
        }
    }

    validate(&config)?;
    Ok((config, warnings))
}

/// Field-level invariants, named by key.
fn validate(config: &RunConfig) -> Result<(), ConfigError> {
    let check = |ok: bool, key: &str, msg: &str| -> Result<(), ConfigError> {
        if ok {
            Ok(())
        } else {
            Err(ConfigError::for_key(key, msg))
        }
    };
    check(config.run.t_total > 0.0, "run.T", "must be > 0")?;
    check(config.run.draws >= 1, "run.draws", "must be >= 1")?;
    check(config.model.gamma >= 0.0, "model.gamma", "must be >= 0")?;
    check(config.model.kappa >= 0.0, "model.kappa", "must be >= 0")?;
    check(config.model.length > 0.0, "model.L", "must be > 0")?;
    check(config.model.delta0 > 0.0, "model.delta0", "must be > 0")?;
    check(config.model.g_a >= 0.0, "model.g_a", "must be >= 0")?;
    check(config.model.g_b >= 0.0, "model.g_b", "must be >= 0")?;
    check(config.pulses.c_a >= 0.0, "pulses.c_a", "must be >= 0")?;
    check(config.pulses.c_b >= 0.0, "pulses.c_b", "must be >= 0")?;
    check(config.pulses.width_frac > 0.0, "pulses.width_frac", "must be > 0")?;
    check(
        (4..=24).contains(&config.integrator.steps_exponent),
        "integrator.steps_exponent",
        "must be between 4 and 24",
    )?;
    check(config.integrator.samples >= 2, "integrator.samples", "must be >= 2")?;
    check(config.integrator.fidelity_tol > 0.0, "integrator.fidelity_tol", "must be > 0")?;
    check(config.integrator.k_tol > 0.0, "integrator.k_tol", "must be > 0")?;
    check(!config.sweep.lengths.is_empty(), "sweep.lengths", "must not be empty")?;
    check(
        config.sweep.lengths.iter().all(|l| *l > 0.0),
        "sweep.lengths",
        "entries must be > 0",
    )?;
    check(
        config.sweep.lengths.windows(2).all(|w| w[0] < w[1]),
        "sweep.lengths",
        "entries must be strictly ascending",
    )?;
    check(!config.sweep.times.is_empty(), "sweep.times", "must not be empty")?;
    check(config.sweep.times.iter().all(|t| *t > 0.0), "sweep.times", "entries must be > 0")?;
    check(!config.output.dir.is_empty(), "output.dir", "must not be empty")?;
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Renders a configuration in the same format `parse_config` reads.
/// Section and key order are fixed, so output is byte-deterministic.
pub fn render_config(config: &RunConfig) -> String {
    let mut out = String::new();
    let mut push = |line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    push("[run]".into());
    push(format!("protocol = {}", config.run.protocol.name()));
    push(format!("model = {}", config.run.model.name()));
    push(format!("T = {}", config.run.t_total));
    push(format!("alpha_re = {}", config.run.alpha_re));
    push(format!("alpha_im = {}", config.run.alpha_im));
    push(format!("beta_re = {}", config.run.beta_re));
    push(format!("beta_im = {}", config.run.beta_im));
    push(format!("seed = {}", config.run.seed));
    push(format!("draws = {}", config.run.draws));
    push(String::new());
    push("[model]".into());
    push(format!("delta_g = {}", config.model.delta_g));
    push(format!("delta_r = {}", config.model.delta_r));
    push(format!("gamma = {}", config.model.gamma));
    push(format!("kappa = {}", config.model.kappa));
    push(format!("g_a = {}", config.model.g_a));
    push(format!("g_b = {}", config.model.g_b));
    push(format!("L = {}", config.model.length));
    push(format!("delta0 = {}", config.model.delta0));
    push(format!("K = {}", config.model.k));
    push(format!("compensate_light_shift = {}", config.model.compensate_light_shift));
    push(format!("include_s11_shift = {}", config.model.include_s11_shift));
    push(String::new());
    push("[pulses]".into());
    push(format!("c_a = {}", config.pulses.c_a));
    push(format!("c_b = {}", config.pulses.c_b));
    push(format!("width_frac = {}", config.pulses.width_frac));
    push(format!("offset_frac = {}", config.pulses.offset_frac));
    push(format!("center_frac = {}", config.pulses.center_frac));
    push(String::new());
    push("[integrator]".into());
    push(format!("steps_exponent = {}", config.integrator.steps_exponent));
    push(format!("samples = {}", config.integrator.samples));
    push(format!("fidelity_tol = {}", config.integrator.fidelity_tol));
    push(format!("max_halvings = {}", config.integrator.max_halvings));
    push(format!("k_tol = {}", config.integrator.k_tol));
    push(format!("max_k_doublings = {}", config.integrator.max_k_doublings));
    push(String::new());
    push("[sweep]".into());
    push(format!("lengths = {}", join(&config.sweep.lengths)));
    push(format!("times = {}", join(&config.sweep.times)));
    push(String::new());
    push("[output]".into());
    push(format!("dir = {}", config.output.dir));
    push(String::new());
    push("[meta]".into());
    push(format!("version = {}", config.meta.version));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_yields_reference_defaults() {
        let (config, warnings) = parse_config("", false).unwrap();
        assert_eq!(config, RunConfig::default());
        assert!(warnings.is_empty());
        assert_eq!(config.pulses.c_a, 2.0);
        assert_eq!(config.model.kappa, 0.1);
        assert_eq!(config.model.delta0, 0.1);
        assert_eq!(config.run.t_total, 300.0);
        assert_eq!(config.pulses.width_frac, 0.2);
        assert_eq!(config.pulses.offset_frac, 0.2);
        assert_eq!(config.sweep.lengths, vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn negative_kappa_is_rejected_naming_the_key() {
        let err = parse_config("[model]\nkappa = -1\n", false).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("model.kappa"));
    }

    #[test]
    fn duplicate_key_warns_and_last_wins() {
        let text = "[model]\nkappa = 0.3\nkappa = 0.4\n";
        let (config, warnings) = parse_config(text, false).unwrap();
        assert_eq!(config.model.kappa, 0.4);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("duplicate key `model.kappa`"));
    }

    #[test]
    fn unknown_key_warns_by_default_and_fails_in_strict_mode() {
        let text = "[model]\nkapa = 0.3\n";
        let (config, warnings) = parse_config(text, false).unwrap();
        assert_eq!(config.model.kappa, 0.1);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("unknown key"));

        let err = parse_config(text, true).unwrap_err();
        assert_eq!(err.key.as_deref(), Some("model.kapa"));
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn unparsable_number_names_line_and_key() {
        let err = parse_config("[run]\nT = threehundred\n", false).unwrap_err();
        assert_eq!(err.line, Some(2));
        assert_eq!(err.key.as_deref(), Some("run.T"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# top comment\n\n[model]\nkappa = 0.2 # trailing\n";
        let (config, _) = parse_config(text, true).unwrap();
        assert_eq!(config.model.kappa, 0.2);
    }

    #[test]
    fn round_trip_default_config() {
        let config = RunConfig::default();
        let (reparsed, warnings) = parse_config(&render_config(&config), true).unwrap();
        assert_eq!(reparsed, config);
        assert!(warnings.is_empty());
    }

    #[test]
    fn round_trip_survives_randomized_configs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let mut config = RunConfig::default();
            config.run.protocol = *[
                Protocol::Transfer,
                Protocol::SweepLength,
                Protocol::ScanT,
                Protocol::CompareModels,
                Protocol::DarkCheck,
            ]
            .iter()
            .nth(rng.gen_range(0..5))
            .unwrap();
            config.run.model =
                if rng.gen_bool(0.5) { ModelChoice::Eliminated } else { ModelChoice::Full };
            config.run.t_total = rng.gen_range(1.0..1e4);
            config.run.alpha_re = rng.gen_range(-1.0..1.0);
            config.run.beta_im = rng.gen_range(-1.0..1.0);
            config.run.seed = rng.gen();
            config.model.delta_g = rng.gen_range(-50.0..50.0);
            config.model.gamma = rng.gen_range(0.0..2.0);
            config.model.kappa = rng.gen_range(0.0..1.0);
            config.model.length = rng.gen_range(0.01..100.0);
            config.model.delta0 = rng.gen_range(1e-4..10.0);
            config.model.k =
                if rng.gen_bool(0.3) { KChoice::Auto } else { KChoice::Fixed(rng.gen_range(0..5000)) };
            config.model.include_s11_shift = rng.gen_bool(0.5);
            config.pulses.c_a = rng.gen_range(0.0..5.0);
            config.pulses.offset_frac = rng.gen_range(-0.4..0.4);
            config.pulses.width_frac = rng.gen_range(0.01..0.2);
            config.integrator.fidelity_tol = 10f64.powf(rng.gen_range(-9.0..-3.0));
            config.integrator.steps_exponent = rng.gen_range(4..=24);
            config.sweep.lengths = {
                let mut acc = 0.0;
                (0..rng.gen_range(1..6))
                    .map(|_| {
                        acc += rng.gen_range(0.1..3.0);
                        acc
                    })
                    .collect()
            };
            config.output.dir = format!("out{}", rng.gen_range(0..100));

            let text = render_config(&config);
            let (reparsed, warnings) = parse_config(&text, true).unwrap();
            assert_eq!(reparsed, config, "round-trip failed for:\n{text}");
            assert!(warnings.is_empty());
        }
    }
}
