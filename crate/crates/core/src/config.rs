//! Scenario files: a strict INI-style grammar and the resolved JSON echo.
//!
//! ```text
//! # comment
//! [section]
//! key = 1            # integer
//! key = 2.5e-3       # float
//! key = 1.5-0.2i     # complex
//! key = "text"       # string (bare words are strings too)
//! key = [0.5, 1, 2]  # list
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Value as Json};

use crate::dynamics::SourceFrame;
use crate::model::{self, ModelParams, TransferParams};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Complex(C64),
    Str(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(_) => f.write_str("integer"),
            Value::Float(_) => f.write_str("float"),
            Value::Complex(_) => f.write_str("complex"),
            Value::Str(_) => f.write_str("string"),
            Value::List(_) => f.write_str("list"),
        }
    }
}

/// One `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub value: Value,
    pub line: usize,
}

/// Sections in file order, keys sorted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub sections: Vec<(String, usize, BTreeMap<String, Entry>)>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::ConfigSyntax { line, column, message: message.into() }
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self { chars: text.char_indices().collect(), pos: 0, line, text }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c == ' ' || c == '\t') {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('#'))
    }

    fn value(&mut self, depth: usize) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            None | Some('#') => Err(syntax(self.line, self.column(), "missing value")),
            Some('"') => self.string(),
            Some('[') => self.list(depth),
            Some(_) => self.scalar(),
        }
    }

    fn string(&mut self) -> Result<Value> {
        let start = self.column();
        self.pos += 1;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(syntax(self.line, start, "unterminated string")),
                Some('"') => {
                    self.pos += 1;
                    return Ok(Value::Str(out));
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c @ ('"' | '\\')) => out.push(c),
                        Some('n') => out.push('\n'),
                        _ => return Err(syntax(self.line, self.column(), "unknown escape")),
                    }
                    self.pos += 1;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn list(&mut self, depth: usize) -> Result<Value> {
        if depth > 8 {
            return Err(syntax(self.line, self.column(), "lists nested too deeply"));
        }
        self.pos += 1;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.pos += 1;
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.value(depth + 1)?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {
                    self.pos += 1;
                    return Ok(Value::List(items));
                }
                _ => return Err(syntax(self.line, self.column(), "expected ',' or ']' in list")),
            }
        }
    }

    fn scalar(&mut self) -> Result<Value> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if !matches!(c, ' ' | '\t' | ',' | ']' | '#' | '[' | '"')) {
            self.pos += 1;
        }
        let byte_start = self.chars[start].0;
        let byte_end = self.chars.get(self.pos).map_or(self.text.len(), |c| c.0);
        let token = &self.text[byte_start..byte_end];
        parse_scalar(token).ok_or_else(|| syntax(self.line, start + 1, format!("cannot read '{token}'")))
    }
}

fn parse_real(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && s.chars().any(|c| c.is_ascii_digit());
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_scalar(token: &str) -> Option<Value> {
    if let Ok(i) = token.parse::<i64>() {
        return Some(Value::Int(i));
    }
    if let Some(x) = parse_real(token) {
        return Some(Value::Float(x));
    }
    if let Some(body) = token.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let imag = |s: &str| match s {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => parse_real(s),
        };
        return match split {
            Some(k) => Some(Value::Complex(C64::new(parse_real(&body[..k])?, imag(&body[k..])?))),
            None => Some(Value::Complex(C64::new(0.0, imag(body)?))),
        };
    }
    let word = token.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && token.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '/'));
    word.then(|| Value::Str(token.to_string()))
}

/// Parses the raw document: syntax only, no schema.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    let mut current: Option<usize> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let mut cur = Cursor::new(raw, line);
        if cur.at_end() {
            continue;
        }
        if cur.peek() == Some('[') {
            cur.pos += 1;
            let start = cur.pos;
            while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                cur.pos += 1;
            }
            let name: String = cur.chars[start..cur.pos].iter().map(|c| c.1).collect();
            if name.is_empty() || cur.peek() != Some(']') {
                return Err(syntax(line, cur.column(), "malformed section header"));
            }
            cur.pos += 1;
            if !cur.at_end() {
                return Err(syntax(line, cur.column(), "trailing text after section header"));
            }
            if let Some((_, first, _)) = doc.sections.iter().find(|s| s.0 == name) {
                return Err(syntax(line, 1, format!("section [{name}] repeats the one on line {first}")));
            }
            doc.sections.push((name, line, BTreeMap::new()));
            current = Some(doc.sections.len() - 1);
            continue;
        }
        let start = cur.pos;
        while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            cur.pos += 1;
        }
        let key: String = cur.chars[start..cur.pos].iter().map(|c| c.1).collect();
        if key.is_empty() {
            return Err(syntax(line, cur.column(), "expected a key"));
        }
        cur.skip_ws();
        if cur.peek() != Some('=') {
            return Err(syntax(line, cur.column(), "expected '='"));
        }
        cur.pos += 1;
        let value = cur.value(0)?;
        if !cur.at_end() {
            return Err(syntax(line, cur.column(), "trailing text after value"));
        }
        let Some(idx) = current else {
            return Err(syntax(line, start + 1, "key outside any section"));
        };
        let section = &mut doc.sections[idx];
        if let Some(prev) = section.2.get(&key) {
            return Err(syntax(
                line,
                start + 1,
                format!("duplicate key '{key}' in [{}] (lines {} and {line})", section.0, prev.line),
            ));
        }
        section.2.insert(key, Entry { value, line });
    }
    Ok(doc)
}

/// Which model produces the states of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Analytic pair-coherent state.
    Pure,
    /// Effective downconversion model.
    Effective,
    /// Full optomechanical model.
    Full,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Pure => "pure",
            Engine::Effective => "effective",
            Engine::Full => "full",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pure" => Some(Engine::Pure),
            "effective" => Some(Engine::Effective),
            "full" | "steady" => Some(Engine::Full),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Zeta,
    Nbar,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Zeta => "zeta",
            SweepAxis::Nbar => "nbar",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    /// End of the time grid, in units of `1 / omega_b1`.
    pub t_end: f64,
    /// Output spacing of the time grid.
    pub t_step: f64,
    pub frame: SourceFrame,
    /// Enables multi-hour full-model horizons.
    pub long: bool,
    pub cavity_start: CavityStart,
}

/// Initial cavity state of full-model runs; the mechanics always start in vacuum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CavityStart {
    /// Cavity at its mean field: the image of the effective model's vacuum.
    MeanField,
    /// Empty cavity in the lab frame, including the ring-up transient.
    Empty,
}

impl CavityStart {
    pub fn name(self) -> &'static str {
        match self {
            CavityStart::MeanField => "mean_field",
            CavityStart::Empty => "empty",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "mean_field" => Some(CavityStart::MeanField),
            "empty" => Some(CavityStart::Empty),
            _ => None,
        }
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-8, t_end: 2000.0, t_step: 50.0, frame: SourceFrame::Interaction, long: false, cavity_start: CavityStart::MeanField }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CatSettings {
    /// Homodyne outcome on the probe output.
    pub x: f64,
    pub wigner_half_width: f64,
    pub wigner_points: usize,
}

impl Default for CatSettings {
    fn default() -> Self {
        Self { x: 0.0, wigner_half_width: 4.5, wigner_points: 121 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub engine: Engine,
    pub model: ModelParams,
    pub transfer: Option<TransferParams>,
    pub sweep: Option<Sweep>,
    /// Cutoffs of (cavity, mechanics 1, mechanics 2).
    pub cutoffs: [usize; 3],
    pub solver: SolverSettings,
    pub cat: CatSettings,
    pub output: String,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            return Err(Error::Config(format!("scenario name '{}' must be non-empty [A-Za-z0-9_.-]", self.name)));
        }
        self.model.validate()?;
        model::derive(&self.model)?;
        if let Some(tp) = &self.transfer {
            tp.validate()?;
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() || sw.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter { field: "sweep.values".into(), reason: "must be finite and non-empty".into() });
            }
            if sw.axis == SweepAxis::Nbar && sw.values.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter { field: "sweep.values".into(), reason: "occupations must be >= 0".into() });
            }
        }
        for (name, c) in ["cutoffs.cavity", "cutoffs.b1", "cutoffs.b2"].iter().zip(self.cutoffs) {
            if !(2..=64).contains(&c) {
                return Err(Error::InvalidParameter { field: (*name).into(), reason: format!("{c} outside 2..=64") });
            }
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(Error::InvalidParameter { field: "solver.tol".into(), reason: "must lie in (0, 1)".into() });
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return Err(Error::InvalidParameter { field: "solver.t_end".into(), reason: "must be > 0".into() });
        }
        if !(s.t_step > 0.0 && s.t_step <= s.t_end) {
            return Err(Error::InvalidParameter { field: "solver.t_step".into(), reason: "must lie in (0, t_end]".into() });
        }
        let c = &self.cat;
        if !c.x.is_finite() || !(c.wigner_half_width > 0.0 && c.wigner_half_width.is_finite()) || c.wigner_points < 2 {
            return Err(Error::InvalidParameter { field: "cat".into(), reason: "needs finite x, half_width > 0, points >= 2".into() });
        }
        Ok(())
    }
}

/// Typed access to one section with strict key accounting.
struct Section<'a> {
    name: &'a str,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Section<'a> {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn wrong(&self, key: &str, e: &Entry, want: &str) -> Error {
        Error::Config(format!("line {}: {} must be {want}, found {}", e.line, self.field(key), e.value))
    }

    fn real(&mut self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value {
            Value::Int(i) => Ok(Some(i as f64)),
            Value::Float(x) => Ok(Some(x)),
            _ => Err(self.wrong(key, &e, "a real number")),
        }
    }

    fn complex(&mut self, key: &str) -> Result<Option<C64>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value {
            Value::Int(i) => Ok(Some(C64::new(i as f64, 0.0))),
            Value::Float(x) => Ok(Some(C64::new(x, 0.0))),
            Value::Complex(z) => Ok(Some(z)),
            _ => Err(self.wrong(key, &e, "a complex number")),
        }
    }

    fn int(&mut self, key: &str) -> Result<Option<usize>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value {
            Value::Int(i) if i >= 0 => Ok(Some(i as usize)),
            _ => Err(self.wrong(key, &e, "a non-negative integer")),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<(String, usize)>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value {
            Value::Str(s) => Ok(Some((s, e.line))),
            _ => Err(self.wrong(key, &e, "a string")),
        }
    }

    fn reals(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let Value::List(items) = &e.value else { return Err(self.wrong(key, &e, "a list of reals")) };
        items
            .iter()
            .map(|v| match v {
                Value::Int(i) => Ok(*i as f64),
                Value::Float(x) => Ok(*x),
                _ => Err(self.wrong(key, &e, "a list of reals")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::InvalidParameter { field: self.field(key), reason: "missing".into() })
    }

    fn finish(self) -> Result<()> {
        match self.entries.iter().next() {
            Some((k, e)) => Err(Error::Config(format!("line {}: unknown key {}.{k}", e.line, self.name))),
            None => Ok(()),
        }
    }
}

/// Every section with its accepted keys.
pub const SCHEMA: [(&str, &[&str]); 7] = [
    ("scenario", &["name", "engine", "output"]),
    (
        "model",
        &[
            "omega_b1", "omega_b2", "g1", "g2", "eps_p", "eps_d", "zeta", "delta", "delta_p", "gamma_a", "gamma_b1",
            "gamma_b2", "nbar", "nbar_b1", "nbar_b2",
        ],
    ),
    ("transfer", &["g_t", "gamma_t", "eps_p2", "delta_t", "tau"]),
    ("sweep", &["axis", "values"]),
    ("cutoffs", &["cavity", "b1", "b2"]),
    ("solver", &["tol", "t_end", "t_step", "frame", "long", "cavity_start"]),
    ("cat", &["x", "wigner_half_width", "wigner_points"]),
];

/// Applies a command-line override `[section.]key=value`; a bare key must belong to
/// exactly one section. Overrides carry line number 0.
pub fn apply_override(doc: &mut Document, spec: &str) -> Result<()> {
    let bad = |why: &str| Error::Config(format!("override '{spec}': {why}"));
    let (path, value) = spec.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path = path.trim();
    let (section, key) = match path.split_once('.') {
        Some((s, k)) => (s.to_string(), k.to_string()),
        None => {
            let owners: Vec<&str> = SCHEMA.iter().filter(|(_, keys)| keys.contains(&path)).map(|(s, _)| *s).collect();
            match owners.as_slice() {
                [one] => (one.to_string(), path.to_string()),
                [] => return Err(bad("unknown key")),
                _ => return Err(bad("ambiguous key; use section.key")),
            }
        }
    };
    if !SCHEMA.iter().any(|(s, keys)| *s == section && keys.contains(&key.as_str())) {
        return Err(bad("unknown key"));
    }
    let mut cur = Cursor::new(value, 0);
    let value = cur.value(0)?;
    if !cur.at_end() {
        return Err(bad("trailing text after value"));
    }
    let entry = Entry { value, line: 0 };
    match doc.sections.iter_mut().find(|s| s.0 == section) {
        Some(s) => {
            s.2.insert(key, entry);
        }
        None => doc.sections.push((section, 0, BTreeMap::from([(key, entry)]))),
    }
    Ok(())
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<Scenario> {
    parse_config_with(text, &[])
}

/// Parses a scenario file and applies command-line overrides before validation.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<Scenario> {
    let mut doc = parse_document(text)?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    scenario_from_document(&doc)
}

fn scenario_from_document(doc: &Document) -> Result<Scenario> {
    let mut sections: BTreeMap<&str, Section<'_>> = BTreeMap::new();
    for (name, line, entries) in &doc.sections {
        let Some(&(known, _)) = SCHEMA.iter().find(|s| s.0 == name.as_str()) else {
            return Err(Error::Config(format!("line {line}: unknown section [{name}]")));
        };
        sections.insert(known, Section { name: known, entries: entries.clone() });
    }
    let mut get = |name: &'static str| sections.remove(name);

    let mut sc = get("scenario").ok_or_else(|| Error::Config("missing section [scenario]".into()))?;
    let name = sc.string("name")?;
    let name = sc.required("name", name)?.0;
    let engine = match sc.string("engine")? {
        None => Engine::Full,
        Some((s, line)) => {
            Engine::parse(&s).ok_or_else(|| Error::Config(format!("line {line}: unknown engine '{s}'")))?
        }
    };
    let output = sc.string("output")?.map_or_else(|| ".".to_string(), |s| s.0);
    sc.finish()?;

    let mut m = get("model").ok_or_else(|| Error::Config("missing section [model]".into()))?;
    let r = |m: &mut Section<'_>, k: &str| -> Result<f64> {
        let v = m.real(k)?;
        m.required(k, v)
    };
    let omega_b1 = r(&mut m, "omega_b1")?;
    let omega_b2 = r(&mut m, "omega_b2")?;
    let g1 = r(&mut m, "g1")?;
    let g2 = r(&mut m, "g2")?;
    let eps_p = m.complex("eps_p")?;
    let eps_p = m.required("eps_p", eps_p)?;
    let delta = r(&mut m, "delta")?;
    let delta_p = r(&mut m, "delta_p")?;
    let gamma_a = r(&mut m, "gamma_a")?;
    let gamma_b1 = r(&mut m, "gamma_b1")?;
    let gamma_b2 = r(&mut m, "gamma_b2")?;
    let nbar = m.real("nbar")?;
    let nbar_b1 = m.real("nbar_b1")?;
    let nbar_b2 = m.real("nbar_b2")?;
    if nbar.is_some() && (nbar_b1.is_some() || nbar_b2.is_some()) {
        return Err(Error::Config("model.nbar conflicts with model.nbar_b1 / model.nbar_b2".into()));
    }
    let eps_d = m.complex("eps_d")?;
    let zeta = m.complex("zeta")?;
    m.finish()?;
    let mut model = ModelParams {
        omega_b1,
        omega_b2,
        g1,
        g2,
        eps_p,
        eps_d: C64::new(0.0, 0.0),
        delta,
        delta_p,
        gamma_a,
        gamma_b1,
        gamma_b2,
        nbar_b1: nbar.or(nbar_b1).unwrap_or(0.0),
        nbar_b2: nbar.or(nbar_b2).unwrap_or(0.0),
    };
    model.validate()?;
    model.eps_d = match (eps_d, zeta) {
        (Some(_), Some(_)) => return Err(Error::Config("give model.eps_d or model.zeta, not both".into())),
        (None, None) => {
            return Err(Error::InvalidParameter { field: "model.eps_d".into(), reason: "missing (or give model.zeta)".into() })
        }
        (Some(e), None) => e,
        (None, Some(z)) => model::eps_d_for_zeta(z, &model::derive(&model)?),
    };

    let transfer = match get("transfer") {
        None => None,
        Some(mut t) => {
            let g_t = t.real("g_t")?;
            let gamma_t = t.real("gamma_t")?;
            let eps_p2 = t.complex("eps_p2")?;
            let delta_t = t.real("delta_t")?;
            let tau = t.real("tau")?;
            let tp = TransferParams {
                g_t: t.required("g_t", g_t)?,
                gamma_t: t.required("gamma_t", gamma_t)?,
                eps_p2: t.required("eps_p2", eps_p2)?,
                delta_t: t.required("delta_t", delta_t)?,
                tau: t.required("tau", tau)?,
            };
            t.finish()?;
            Some(tp)
        }
    };

    let sweep = match get("sweep") {
        None => None,
        Some(mut s) => {
            let axis = s.string("axis")?;
            let (axis, line) = s.required("axis", axis)?;
            let axis = match axis.as_str() {
                "zeta" => SweepAxis::Zeta,
                "nbar" => SweepAxis::Nbar,
                other => return Err(Error::Config(format!("line {line}: unknown sweep axis '{other}'"))),
            };
            let values = s.reals("values")?;
            let values = s.required("values", values)?;
            s.finish()?;
            Some(Sweep { axis, values })
        }
    };

    let default_cavity = if engine == Engine::Full { 6 } else { 4 };
    let cutoffs = match get("cutoffs") {
        None => [default_cavity, 14, 14],
        Some(mut c) => {
            let out = [
                c.int("cavity")?.unwrap_or(default_cavity),
                c.int("b1")?.unwrap_or(14),
                c.int("b2")?.unwrap_or(14),
            ];
            c.finish()?;
            out
        }
    };

    let mut solver = SolverSettings::default();
    if let Some(mut s) = get("solver") {
        solver.tol = s.real("tol")?.unwrap_or(solver.tol);
        solver.t_end = s.real("t_end")?.unwrap_or(solver.t_end);
        solver.t_step = s.real("t_step")?.unwrap_or(solver.t_step);
        if let Some((f, line)) = s.string("frame")? {
            solver.frame = match f.as_str() {
                "rotating" => SourceFrame::Rotating,
                "displaced" => SourceFrame::Displaced,
                "interaction" => SourceFrame::Interaction,
                other => return Err(Error::Config(format!("line {line}: unknown frame '{other}'"))),
            };
        }
        if let Some((b, line)) = s.string("long")? {
            solver.long = match b.as_str() {
                "true" => true,
                "false" => false,
                other => return Err(Error::Config(format!("line {line}: solver.long must be true or false, found '{other}'"))),
            };
        }
        if let Some((c, line)) = s.string("cavity_start")? {
            solver.cavity_start = CavityStart::parse(&c).ok_or_else(|| {
                Error::Config(format!("line {line}: solver.cavity_start must be mean_field or empty, found '{c}'"))
            })?;
        }
        s.finish()?;
    }

    let mut cat = CatSettings::default();
    if let Some(mut c) = get("cat") {
        cat.x = c.real("x")?.unwrap_or(cat.x);
        cat.wigner_half_width = c.real("wigner_half_width")?.unwrap_or(cat.wigner_half_width);
        cat.wigner_points = c.int("wigner_points")?.unwrap_or(cat.wigner_points);
        c.finish()?;
    }

    let scenario = Scenario { name, engine, model, transfer, sweep, cutoffs, solver, cat, output };
    scenario.validate()?;
    Ok(scenario)
}

const FREQ: &str = "omega_b1 (frequency unit)";
const TIME: &str = "1/omega_b1 (time unit)";
const PHONONS: &str = "quanta (dimensionless)";
const NONE: &str = "dimensionless";

fn quantity(value: Json, unit: &str) -> Json {
    json!({ "value": value, "unit": unit })
}

fn complex_json(z: C64) -> Json {
    json!({ "re": z.re, "im": z.im })
}

/// JSON echo of a scenario; every physical number carries its unit.
pub fn resolved_json(s: &Scenario) -> Json {
    let m = &s.model;
    let derived = model::derive(m).ok();
    let mut out = Map::new();
    out.insert("scenario".into(), json!({ "name": s.name, "engine": s.engine.name(), "output": s.output }));
    out.insert(
        "model".into(),
        json!({
            "omega_b1": quantity(json!(m.omega_b1), FREQ),
            "omega_b2": quantity(json!(m.omega_b2), FREQ),
            "g1": quantity(json!(m.g1), FREQ),
            "g2": quantity(json!(m.g2), FREQ),
            "eps_p": quantity(complex_json(m.eps_p), FREQ),
            "eps_d": quantity(complex_json(m.eps_d), FREQ),
            "delta": quantity(json!(m.delta), FREQ),
            "delta_p": quantity(json!(m.delta_p), FREQ),
            "gamma_a": quantity(json!(m.gamma_a), FREQ),
            "gamma_b1": quantity(json!(m.gamma_b1), FREQ),
            "gamma_b2": quantity(json!(m.gamma_b2), FREQ),
            "nbar_b1": quantity(json!(m.nbar_b1), PHONONS),
            "nbar_b2": quantity(json!(m.nbar_b2), PHONONS),
        }),
    );
    if let Some(d) = derived {
        out.insert(
            "derived".into(),
            json!({
                "alpha": quantity(complex_json(d.alpha), NONE),
                "g": quantity(complex_json(d.g), FREQ),
                "g0": quantity(json!(d.g0), FREQ),
                "delta_tilde": quantity(json!(d.delta_tilde), FREQ),
                "zeta": quantity(complex_json(d.zeta), NONE),
            }),
        );
    }
    if let Some(t) = &s.transfer {
        out.insert(
            "transfer".into(),
            json!({
                "g_t": quantity(json!(t.g_t), FREQ),
                "gamma_t": quantity(json!(t.gamma_t), FREQ),
                "eps_p2": quantity(complex_json(t.eps_p2), FREQ),
                "delta_t": quantity(json!(t.delta_t), FREQ),
                "tau": quantity(json!(t.tau), TIME),
            }),
        );
    }
    if let Some(sw) = &s.sweep {
        let unit = if sw.axis == SweepAxis::Zeta { NONE } else { PHONONS };
        out.insert("sweep".into(), json!({ "axis": sw.axis.name(), "values": quantity(json!(sw.values), unit) }));
    }
    out.insert("cutoffs".into(), json!({ "cavity": s.cutoffs[0], "b1": s.cutoffs[1], "b2": s.cutoffs[2] }));
    let frame = match s.solver.frame {
        SourceFrame::Rotating => "rotating",
        SourceFrame::Displaced => "displaced",
        SourceFrame::Interaction => "interaction",
    };
    out.insert(
        "solver".into(),
        json!({
            "tol": s.solver.tol,
            "t_end": quantity(json!(s.solver.t_end), TIME),
            "t_step": quantity(json!(s.solver.t_step), TIME),
            "frame": frame,
            "long": s.solver.long,
            "cavity_start": s.solver.cavity_start.name(),
        }),
    );
    out.insert(
        "cat".into(),
        json!({
            "x": quantity(json!(s.cat.x), "unit-vacuum-variance quadrature"),
            "wigner_half_width": quantity(json!(s.cat.wigner_half_width), "coherent amplitude"),
            "wigner_points": s.cat.wigner_points,
        }),
    );
    Json::Object(out)
}

fn bad(path: &str) -> Error {
    Error::Config(format!("resolved echo: missing or malformed {path}"))
}

fn at<'a>(v: &'a Json, path: &str) -> Result<&'a Json> {
    path.split('.').try_fold(v, |cur, k| cur.get(k)).ok_or_else(|| bad(path))
}

fn num(v: &Json, path: &str) -> Result<f64> {
    at(v, path)?.as_f64().ok_or_else(|| bad(path))
}

fn qty(v: &Json, path: &str) -> Result<f64> {
    num(v, &format!("{path}.value"))
}

fn cqty(v: &Json, path: &str) -> Result<C64> {
    Ok(C64::new(num(v, &format!("{path}.value.re"))?, num(v, &format!("{path}.value.im"))?))
}

fn text<'a>(v: &'a Json, path: &str) -> Result<&'a str> {
    at(v, path)?.as_str().ok_or_else(|| bad(path))
}

fn count(v: &Json, path: &str) -> Result<usize> {
    at(v, path)?.as_u64().map(|u| u as usize).ok_or_else(|| bad(path))
}

/// Rebuilds the scenario from `resolved_json` output.
pub fn parse_resolved(text_in: &str) -> Result<Scenario> {
    let v: Json = serde_json::from_str(text_in)?;
    let engine = Engine::parse(text(&v, "scenario.engine")?).ok_or_else(|| bad("scenario.engine"))?;
    let model = ModelParams {
        omega_b1: qty(&v, "model.omega_b1")?,
        omega_b2: qty(&v, "model.omega_b2")?,
        g1: qty(&v, "model.g1")?,
        g2: qty(&v, "model.g2")?,
        eps_p: cqty(&v, "model.eps_p")?,
        eps_d: cqty(&v, "model.eps_d")?,
        delta: qty(&v, "model.delta")?,
        delta_p: qty(&v, "model.delta_p")?,
        gamma_a: qty(&v, "model.gamma_a")?,
        gamma_b1: qty(&v, "model.gamma_b1")?,
        gamma_b2: qty(&v, "model.gamma_b2")?,
        nbar_b1: qty(&v, "model.nbar_b1")?,
        nbar_b2: qty(&v, "model.nbar_b2")?,
    };
    let transfer = match v.get("transfer") {
        None => None,
        Some(_) => Some(TransferParams {
            g_t: qty(&v, "transfer.g_t")?,
            gamma_t: qty(&v, "transfer.gamma_t")?,
            eps_p2: cqty(&v, "transfer.eps_p2")?,
            delta_t: qty(&v, "transfer.delta_t")?,
            tau: qty(&v, "transfer.tau")?,
        }),
    };
    let sweep = match v.get("sweep") {
        None => None,
        Some(_) => {
            let axis = match text(&v, "sweep.axis")? {
                "zeta" => SweepAxis::Zeta,
                "nbar" => SweepAxis::Nbar,
                _ => return Err(bad("sweep.axis")),
            };
            let values = at(&v, "sweep.values.value")?
                .as_array()
                .ok_or_else(|| bad("sweep.values"))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad("sweep.values")))
                .collect::<Result<Vec<_>>>()?;
            Some(Sweep { axis, values })
        }
    };
    let frame = match text(&v, "solver.frame")? {
        "rotating" => SourceFrame::Rotating,
        "displaced" => SourceFrame::Displaced,
        "interaction" => SourceFrame::Interaction,
        _ => return Err(bad("solver.frame")),
    };
    let scenario = Scenario {
        name: text(&v, "scenario.name")?.to_string(),
        engine,
        model,
        transfer,
        sweep,
        cutoffs: [count(&v, "cutoffs.cavity")?, count(&v, "cutoffs.b1")?, count(&v, "cutoffs.b2")?],
        solver: SolverSettings {
            tol: num(&v, "solver.tol")?,
            t_end: qty(&v, "solver.t_end")?,
            t_step: qty(&v, "solver.t_step")?,
            frame,
            long: at(&v, "solver.long")?.as_bool().ok_or_else(|| bad("solver.long"))?,
            cavity_start: CavityStart::parse(text(&v, "solver.cavity_start")?).ok_or_else(|| bad("solver.cavity_start"))?,
        },
        cat: CatSettings {
            x: qty(&v, "cat.x")?,
            wigner_half_width: qty(&v, "cat.wigner_half_width")?,
            wigner_points: count(&v, "cat.wigner_points")?,
        },
        output: text(&v, "scenario.output")?.to_string(),
    };
    scenario.validate()?;
    Ok(scenario)
}
