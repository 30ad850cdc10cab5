//! Scenario ingestion: JSON or flat key=value files, flag overrides, and
//! resolution into the typed configurations of the core crate.

use rabi_sim::dynamics::{InitialState, QuenchProtocol, Segment, SegmentHamiltonian};
use rabi_sim::error::Error;
use rabi_sim::lattice::{LatticeConfig, LatticeGeometry};
use rabi_sim::models::ModelParams;
use rabi_sim::spin::Spin;
use rabi_sim::{atoms, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    /// Fock cutoff; absent means automatic convergence resolution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    /// Number of two-level systems; selects the Dicke builder in `spectrum`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dicke_n: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configuration: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depths: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentSection {
    pub duration: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
}

impl Default for SegmentSection {
    fn default() -> Self {
        SegmentSection {
            duration: 0.0,
            omega: None,
            g: None,
            omega0: None,
            g_eps: None,
            g2: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    pub segments: Vec<SegmentSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub motional_levels: Option<usize>,
}

/// The full, echoable scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub species: Option<String>,
    pub model: ModelSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeSection>,
    pub n_points: usize,
    pub n_states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    pub output: String,
    pub format: String,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            command: String::new(),
            species: None,
            model: ModelSection::default(),
            lattice: None,
            n_points: 2048,
            n_states: 30,
            sweep: None,
            evolve: None,
            output: "rabi_out".to_string(),
            format: "both".to_string(),
        }
    }
}

/// Parse a scenario file: JSON when it starts with `{`, flat key=value
/// otherwise. `overrides` are applied afterwards with the same key table.
pub fn parse_scenario(
    file: Option<&str>,
    overrides: &[String],
    command: &str,
) -> Result<Scenario> {
    let mut sc = match file {
        None => Scenario::default(),
        Some(text) => {
            if text.trim_start().starts_with('{') {
                serde_json::from_str(text)
                    .map_err(|e| Error::Validation(format!("scenario JSON: {e}")))?
            } else {
                let mut sc = Scenario::default();
                for (lineno, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let (key, value) = line.split_once('=').ok_or_else(|| {
                        Error::Validation(format!("line {}: expected key=value", lineno + 1))
                    })?;
                    apply_key(&mut sc, key.trim(), value.trim())?;
                }
                sc
            }
        }
    };
    for kv in overrides {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set expects key=value, got `{kv}`")))?;
        apply_key(&mut sc, key.trim(), value.trim())?;
    }
    if !command.is_empty() {
        sc.command = command.to_string();
    }
    if sc.command.is_empty() {
        return Err(Error::MissingKey("command".into()));
    }
    match sc.format.as_str() {
        "csv" | "json" | "both" => {}
        other => {
            return Err(Error::Validation(format!(
                "format must be csv, json or both, got `{other}`"
            )))
        }
    }
    sc.resolve_defaults();
    Ok(sc)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Validation(format!("key `{key}`: cannot parse `{value}` as a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Validation(format!("key `{key}`: cannot parse `{value}` as an integer")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_f64(key, v.trim()))
        .collect()
}

/// The flat key table; `--set` shares it.
fn apply_key(sc: &mut Scenario, key: &str, value: &str) -> Result<()> {
    match key {
        "command" => sc.command = value.to_string(),
        "species" => sc.species = Some(value.to_string()),
        "output" => sc.output = value.to_string(),
        "format" => sc.format = value.to_string(),
        "omega" => sc.model.omega = Some(parse_f64(key, value)?),
        "g" => sc.model.g = Some(parse_f64(key, value)?),
        "omega0" => sc.model.omega0 = Some(parse_f64(key, value)?),
        "g_eps" => sc.model.g_eps = Some(parse_f64(key, value)?),
        "g2" => sc.model.g2 = Some(parse_f64(key, value)?),
        "f" => sc.model.f = Some(value.to_string()),
        "fock_cutoff" => {
            sc.model.fock_cutoff = if value == "auto" {
                None
            } else {
                Some(parse_usize(key, value)?)
            }
        }
        "dicke_n" => sc.model.dicke_n = Some(parse_usize(key, value)?),
        "configuration" => lattice_mut(sc).configuration = Some(value.to_string()),
        "lambda_t" => lattice_mut(sc).lambda_t = Some(parse_f64(key, value)?),
        "lambda_c" => lattice_mut(sc).lambda_c = Some(parse_f64(key, value)?),
        "v0" => lattice_mut(sc).v0 = Some(parse_f64(key, value)?),
        "bx" => lattice_mut(sc).bx = Some(parse_f64(key, value)?),
        "bz" => lattice_mut(sc).bz = Some(parse_f64(key, value)?),
        "eps" => lattice_mut(sc).eps = Some(parse_f64(key, value)?),
        "phase" => lattice_mut(sc).phase = Some(parse_f64(key, value)?),
        "n_points" => sc.n_points = parse_usize(key, value)?,
        "n_states" => sc.n_states = parse_usize(key, value)?,
        "ratios" => sweep_mut(sc).ratios = Some(parse_list(key, value)?),
        "depths" => sweep_mut(sc).depths = Some(parse_list(key, value)?),
        "initial" => evolve_mut(sc).initial = Some(value.to_string()),
        "segments" => evolve_mut(sc).segments = parse_segments(value)?,
        "sample_dt" => evolve_mut(sc).sample_dt = Some(parse_f64(key, value)?),
        "motional_levels" => evolve_mut(sc).motional_levels = Some(parse_usize(key, value)?),
        _ => return Err(Error::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn lattice_mut(sc: &mut Scenario) -> &mut LatticeSection {
    sc.lattice.get_or_insert_with(LatticeSection::default)
}

fn sweep_mut(sc: &mut Scenario) -> &mut SweepSection {
    sc.sweep.get_or_insert_with(SweepSection::default)
}

fn evolve_mut(sc: &mut Scenario) -> &mut EvolveSection {
    sc.evolve.get_or_insert_with(EvolveSection::default)
}

/// Segment grammar: `DURATION:key=value,key=value;DURATION:...` with model
/// parameter keys overriding the base model per segment.
fn parse_segments(text: &str) -> Result<Vec<SegmentSection>> {
    let mut out = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (dur, rest) = match part.split_once(':') {
            Some((d, r)) => (d, r),
            None => (part, ""),
        };
        let mut seg = SegmentSection {
            duration: parse_f64("segments", dur.trim())?,
            ..SegmentSection::default()
        };
        for kv in rest.split(',') {
            let kv = kv.trim();
            if kv.is_empty() {
                continue;
            }
            let (k, v) = kv.split_once('=').ok_or_else(|| {
                Error::Validation(format!("segment entry `{kv}` is not key=value"))
            })?;
            let v = parse_f64("segments", v.trim())?;
            match k.trim() {
                "omega" => seg.omega = Some(v),
                "g" => seg.g = Some(v),
                "omega0" => seg.omega0 = Some(v),
                "g_eps" => seg.g_eps = Some(v),
                "g2" => seg.g2 = Some(v),
                other => return Err(Error::UnknownKey(format!("segments.{other}"))),
            }
        }
        out.push(seg);
    }
    if out.is_empty() {
        return Err(Error::Validation("segments list is empty".into()));
    }
    Ok(out)
}

/// Echo form: pretty JSON with a trailing newline; stable field order.
pub fn echo(sc: &Scenario) -> String {
    let mut s = serde_json::to_string_pretty(sc).expect("scenario serializes");
    s.push('\n');
    s
}

fn require<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::MissingKey(key.to_string()))
}

impl Scenario {
    /// Make defaults explicit in the sections the command actually uses, so
    /// the JSON echo documents the fully resolved run. Idempotent.
    fn resolve_defaults(&mut self) {
        if matches!(self.command.as_str(), "spectrum" | "evolve") {
            let m = &mut self.model;
            m.g.get_or_insert(0.0);
            m.omega0.get_or_insert(0.0);
            m.g_eps.get_or_insert(0.0);
            m.g2.get_or_insert(0.0);
            m.f.get_or_insert_with(|| "1/2".to_string());
        }
        if let Some(lat) = &mut self.lattice {
            lat.bx.get_or_insert(0.0);
            lat.bz.get_or_insert(0.0);
            lat.eps.get_or_insert(0.0);
            lat.phase.get_or_insert(0.0);
            if let (Some(lt), None, Some(cfg)) =
                (lat.lambda_t, lat.lambda_c, lat.configuration.as_deref())
            {
                if let Ok(geom) = LatticeGeometry::parse(cfg) {
                    lat.lambda_c = Some(lt / geom.expected_wavelength_ratio());
                }
            }
        }
        if let Some(ev) = &mut self.evolve {
            ev.initial.get_or_insert_with(|| "ground".to_string());
            ev.motional_levels.get_or_insert(8);
            if ev.sample_dt.is_none() && !ev.segments.is_empty() {
                let total: f64 = ev.segments.iter().map(|s| s.duration).sum();
                ev.sample_dt = Some(if total > 0.0 { total / 200.0 } else { 1.0 });
            }
        }
    }

    /// Model parameters with every default made explicit; the cutoff stays
    /// `None` here when automatic (resolved against the command's state
    /// count at run time).
    pub fn model_params(&self, cutoff: usize) -> Result<ModelParams> {
        let omega = require(self.model.omega, "omega")?;
        let spin = Spin::parse(self.model.f.as_deref().unwrap_or("1/2"))?;
        let p = ModelParams {
            omega,
            g: self.model.g.unwrap_or(0.0),
            omega0: self.model.omega0.unwrap_or(0.0),
            g_eps: self.model.g_eps.unwrap_or(0.0),
            g2: self.model.g2.unwrap_or(0.0),
            spin,
            fock_cutoff: self.model.fock_cutoff.unwrap_or(cutoff),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn lattice_config(&self) -> Result<LatticeConfig> {
        let name = self
            .species
            .as_deref()
            .ok_or_else(|| Error::MissingKey("species".into()))?;
        let species = atoms::species(name)?;
        let section = self
            .lattice
            .as_ref()
            .ok_or_else(|| Error::MissingKey("lattice".into()))?;
        let geometry = LatticeGeometry::parse(
            section
                .configuration
                .as_deref()
                .ok_or_else(|| Error::MissingKey("configuration".into()))?,
        )?;
        let lambda_t = require(section.lambda_t, "lambda_t")?;
        let lambda_c = section
            .lambda_c
            .unwrap_or(lambda_t / geometry.expected_wavelength_ratio());
        let mut cfg = LatticeConfig::new(
            species,
            geometry,
            lambda_t,
            lambda_c,
            require(section.v0, "v0")?,
        )?;
        cfg.bx = section.bx.unwrap_or(0.0);
        cfg.bz = section.bz.unwrap_or(0.0);
        cfg.eps = section.eps.unwrap_or(0.0);
        cfg.phase = section.phase.unwrap_or(0.0);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Build the quench protocol from the evolve section on top of the base
    /// model.
    pub fn protocol(&self, base: &ModelParams) -> Result<(QuenchProtocol, f64, usize)> {
        let section = self
            .evolve
            .as_ref()
            .ok_or_else(|| Error::MissingKey("segments".into()))?;
        if section.segments.is_empty() {
            return Err(Error::MissingKey("segments".into()));
        }
        let segments: Vec<Segment> = section
            .segments
            .iter()
            .map(|s| Segment {
                duration: s.duration,
                hamiltonian: SegmentHamiltonian::Model(ModelParams {
                    omega: s.omega.unwrap_or(base.omega),
                    g: s.g.unwrap_or(base.g),
                    omega0: s.omega0.unwrap_or(base.omega0),
                    g_eps: s.g_eps.unwrap_or(base.g_eps),
                    g2: s.g2.unwrap_or(base.g2),
                    spin: base.spin,
                    fock_cutoff: base.fock_cutoff,
                }),
            })
            .collect();
        let initial = parse_initial(
            section.initial.as_deref().unwrap_or("ground"),
        )?;
        let total: f64 = segments.iter().map(|s| s.duration).sum();
        let sample_dt = section
            .sample_dt
            .unwrap_or(if total > 0.0 { total / 200.0 } else { 1.0 });
        let motional = section.motional_levels.unwrap_or(8);
        Ok((QuenchProtocol { segments, initial }, sample_dt, motional))
    }
}

/// Initial-state grammar: `ground`, `fock:N:M`, `coherent:ALPHA:M` with M a
/// (possibly fractional) m_F like `1`, `-1/2`.
pub fn parse_initial(text: &str) -> Result<InitialState> {
    let bad = |t: &str| Error::Validation(format!("cannot parse initial state `{t}`"));
    if text == "ground" {
        return Ok(InitialState::Ground);
    }
    let mut parts = text.split(':');
    match parts.next() {
        Some("fock") => {
            let n = parts
                .next()
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| bad(text))?;
            let two_m = parse_two_m(parts.next().ok_or_else(|| bad(text))?)?;
            Ok(InitialState::FockSpin { n, two_m })
        }
        Some("coherent") => {
            let alpha = parts
                .next()
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| bad(text))?;
            let two_m = parse_two_m(parts.next().ok_or_else(|| bad(text))?)?;
            Ok(InitialState::Coherent { alpha, two_m })
        }
        _ => Err(bad(text)),
    }
}

fn parse_two_m(text: &str) -> Result<i32> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i32 = num
            .trim()
            .parse()
            .map_err(|_| Error::Validation(format!("bad m_F `{text}`")))?;
        if den.trim() != "2" {
            return Err(Error::Validation(format!("bad m_F `{text}`")));
        }
        Ok(num)
    } else {
        let whole: i32 = text
            .parse()
            .map_err(|_| Error::Validation(format!("bad m_F `{text}`")))?;
        Ok(2 * whole)
    }
}


/// Every scenario key (files and --set), shown by `--help` and `--list-keys`.
pub const KEY_DOCUMENTATION: &str = "\
Scenario keys (files and --set):
  command          params | spectrum | lattice-spectrum | compare | sweep | evolve
  species          registry name, e.g. 87Rb:F=1, 87Rb:F=2, 85Rb:F=3, 6Li:F=1/2
  output           output path prefix (default rabi_out)
  format           csv | json | both (default both)
  omega            mode frequency (rad/s)
  g                linear coupling (rad/s)
  omega0           two-level splitting (rad/s)
  g_eps            drive term (rad/s)
  g2               quadratic coupling (rad/s)
  f                spin F, e.g. 1/2 or 1 (default 1/2)
  fock_cutoff      integer or `auto` (default auto)
  dicke_n          number of two-level systems; uses the Dicke builder
  configuration    LinThetaLin | TwoLattice2to1 | TwoLattice3to2
  lambda_t         trapping wavelength (m)
  lambda_c         coupling wavelength (m; default lambda_t/ratio)
  v0               trap depth (units of E_r)
  bx               coupling-field amplitude (T)
  bz               offset field (T)
  eps              homogeneous x field (T)
  phase            coupling-lattice phase (rad)
  n_points         grid points, power of two >= 128 (default 2048)
  n_states         states to compute/compare (default 30)
  ratios           comma list of g_eff/omega_eff targets (sweep)
  depths           comma list of V0 in E_r (sweep)
  initial          ground | fock:N:M | coherent:ALPHA:M (M like -1/2)
  segments         DUR:key=value,...;DUR:... model overrides per segment
  sample_dt        observable sampling step (s)
  motional_levels  Fock levels in the motional record (default 8)
";
