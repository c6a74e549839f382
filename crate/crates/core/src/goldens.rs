//! Golden tables: a small plain-text DSL, its parser and emitters, the
//! embedded reference corpus, and exact comparison against solved tables.
//!
//! One entry looks like
//!
//! ```text
//! [vnotch90 primal j=1 h=0 f=0]
//!   1 sin 2/3 ; 0+1/3r3 cos 2/3
//! ```
//!
//! Coefficients are `<rat>` or `<rat>±<rat>r3` where `r3` is √3; the
//! trailing fraction is the frequency. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactnum::{format_rational, rat, ExtScalar, Rational};
use crate::geometry::Geometry;
use crate::recursion::{build_rhs, neumann_residuals, ode_residual, Kind, ShadowKey, ShadowTable, SolveError};
use crate::trigpoly::TrigPoly;

/// Environment variable naming a directory of `*.dsl` files that replaces
/// the embedded corpus.
pub const GOLDEN_DIR_ENV: &str = "SHADOW_GOLDEN_DIR";

static EMBEDDED: &[(&str, &str)] = &[
    ("crack_primal_j1", include_str!("../goldens/crack_primal_j1.dsl")),
    ("crack_primal_j3", include_str!("../goldens/crack_primal_j3.dsl")),
    ("crack_primal_j5", include_str!("../goldens/crack_primal_j5.dsl")),
    ("crack_primal_j7", include_str!("../goldens/crack_primal_j7.dsl")),
    ("crack_primal_j9", include_str!("../goldens/crack_primal_j9.dsl")),
    ("crack_primal_j11", include_str!("../goldens/crack_primal_j11.dsl")),
    ("crack_primal_j13", include_str!("../goldens/crack_primal_j13.dsl")),
    ("crack_primal_j15-21", include_str!("../goldens/crack_primal_j15-21.dsl")),
    ("crack_dual_j1", include_str!("../goldens/crack_dual_j1.dsl")),
    ("crack_dual_j3", include_str!("../goldens/crack_dual_j3.dsl")),
    ("crack_dual_j5", include_str!("../goldens/crack_dual_j5.dsl")),
    ("vnotch90_primal_j1", include_str!("../goldens/vnotch90_primal_j1.dsl")),
    ("vnotch90_primal_j2", include_str!("../goldens/vnotch90_primal_j2.dsl")),
    ("vnotch90_primal_j3-17", include_str!("../goldens/vnotch90_primal_j3-17.dsl")),
    ("vnotch90_dual_j1", include_str!("../goldens/vnotch90_dual_j1.dsl")),
    ("vnotch90_dual_j2-4", include_str!("../goldens/vnotch90_dual_j2-4.dsl")),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{source_name}: {error}")]
    Parse { source_name: String, error: ParseError },
    #[error("duplicate entry {geometry} {key}")]
    Duplicate { geometry: Geometry, key: ShadowKey },
    #[error("reading {path}: {error}")]
    Io { path: String, error: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenEntry {
    pub geometry: Geometry,
    pub key: ShadowKey,
    pub poly: TrigPoly,
    pub source: String,
}

// --- lexer -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LBracket,
    RBracket,
    Eq,
    Slash,
    Plus,
    Minus,
    Semi,
    Int(String),
    Ident(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Slash => write!(f, "`/`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Int(s) => write!(f, "integer `{s}`"),
            Tok::Ident(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                '[' => Some(Tok::LBracket),
                ']' => Some(Tok::RBracket),
                '=' => Some(Tok::Eq),
                '/' => Some(Tok::Slash),
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                ';' => Some(Tok::Semi),
                _ => None,
            };
            let tok = if let Some(t) = single {
                i += 1;
                t
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Int(chars[start..i].iter().collect())
            } else if c.is_ascii_alphabetic() {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else {
                return Err(ParseError { line: li + 1, col, message: format!("unexpected character `{c}`") });
            };
            out.push(Spanned { tok, line: li + 1, col });
        }
    }
    Ok(out)
}

// --- parser ----------------------------------------------------------------

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = lex(text)?;
        let lines = text.lines().count().max(1);
        let last_len = text.lines().last().map_or(0, |l| l.chars().count());
        Ok(Parser { toks, pos: 0, end: (lines, last_len + 1) })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |s| (s.line, s.col))
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, message: message.into() }
    }

    fn expected(&self, what: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {what}, found {t}")),
            None => self.error(format!("expected {what}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.expected(&tok.to_string()))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.expected(what)),
        }
    }

    fn int(&mut self) -> Result<BigInt, ParseError> {
        match self.peek() {
            Some(Tok::Int(s)) => {
                let v = s.parse::<BigInt>().expect("lexer yields digits");
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.expected("an integer")),
        }
    }

    fn small_int(&mut self) -> Result<u32, ParseError> {
        let at = self.here();
        let v = self.int()?;
        u32::try_from(v).map_err(|_| ParseError { line: at.0, col: at.1, message: "index too large".into() })
    }

    /// `int [/ int]`, unsigned.
    fn unsigned_rational(&mut self) -> Result<Rational, ParseError> {
        let at = self.here();
        let num = self.int()?;
        let den = if self.eat(&Tok::Slash) { self.int()? } else { BigInt::one() };
        if den.is_zero() {
            return Err(ParseError { line: at.0, col: at.1, message: "zero denominator".into() });
        }
        Ok(Rational::new(num, den))
    }

    fn signed_rational(&mut self) -> Result<Rational, ParseError> {
        let neg = if self.eat(&Tok::Minus) {
            true
        } else {
            self.eat(&Tok::Plus);
            false
        };
        let r = self.unsigned_rational()?;
        Ok(if neg { -r } else { r })
    }

    fn is_r3(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == "r3")
    }

    fn coefficient(&mut self) -> Result<ExtScalar, ParseError> {
        let a = self.signed_rational()?;
        if self.is_r3() {
            self.pos += 1;
            return Ok(ExtScalar::new(Rational::zero(), a));
        }
        if matches!(self.peek(), Some(Tok::Plus | Tok::Minus)) && matches!(self.peek2(), Some(Tok::Int(_))) {
            let b = self.signed_rational()?;
            if !self.is_r3() {
                return Err(self.expected("`r3`"));
            }
            self.pos += 1;
            return Ok(ExtScalar::new(a, b));
        }
        Ok(ExtScalar::from_rational(a))
    }

    fn header(&mut self) -> Result<(Geometry, ShadowKey), ParseError> {
        self.expect(Tok::LBracket)?;
        let at = self.here();
        let geometry: Geometry = self
            .ident("a geometry name")?
            .parse()
            .map_err(|m| ParseError { line: at.0, col: at.1, message: m })?;
        let at = self.here();
        let kind: Kind = self
            .ident("`primal` or `dual`")?
            .parse()
            .map_err(|m| ParseError { line: at.0, col: at.1, message: m })?;
        let mut idx = [0u32; 3];
        for (slot, name) in idx.iter_mut().zip(["j", "h", "f"]) {
            let found = self.ident(&format!("`{name}=`"))?;
            if found != name {
                self.pos -= 1;
                return Err(self.expected(&format!("`{name}=`")));
            }
            self.expect(Tok::Eq)?;
            *slot = self.small_int()?;
        }
        let [j, h, f] = idx;
        if j == 0 || h % 2 == 1 {
            return Err(self.error("j must be positive and h even"));
        }
        self.expect(Tok::RBracket)?;
        Ok((geometry, ShadowKey::new(kind, h, j, f)))
    }

    fn body(&mut self, q: u32) -> Result<TrigPoly, ParseError> {
        let mut poly = TrigPoly::zero(q);
        // A lone `0` is the empty polynomial.
        if self.peek() == Some(&Tok::Int("0".into())) && !matches!(self.peek2(), Some(Tok::Slash | Tok::Plus | Tok::Minus | Tok::Ident(_))) {
            self.pos += 1;
            return Ok(poly);
        }
        loop {
            let c = self.coefficient()?;
            let fname = self.ident("`sin` or `cos`")?;
            if fname != "sin" && fname != "cos" {
                self.pos -= 1;
                return Err(self.expected("`sin` or `cos`"));
            }
            let at = self.here();
            let freq = self.unsigned_rational()?;
            let k = freq * rat(q as i64, 1);
            if !k.is_integer() {
                return Err(ParseError { line: at.0, col: at.1, message: format!("frequency is not a multiple of 1/{q}") });
            }
            let k = u32::try_from(k.to_integer())
                .map_err(|_| ParseError { line: at.0, col: at.1, message: "frequency too large".into() })?;
            let term = if fname == "sin" {
                TrigPoly::sin_term(q, k, c)
            } else {
                TrigPoly::cos_term(q, k, c)
            };
            poly = poly.add(&term).expect("same lattice");
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        Ok(poly)
    }

    fn entry(&mut self, source: &str) -> Result<GoldenEntry, ParseError> {
        let (geometry, key) = self.header()?;
        let poly = self.body(geometry.freq_den())?;
        Ok(GoldenEntry { geometry, key, poly, source: source.to_string() })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parses exactly one entry.
pub fn parse_entry(text: &str) -> Result<GoldenEntry, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.entry("")?;
    if !p.at_end() {
        return Err(p.expected("end of entry"));
    }
    Ok(e)
}

/// Parses a whole corpus file; every entry gets `source` as its label.
pub fn parse_corpus(text: &str, source: &str) -> Result<Vec<GoldenEntry>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.entry(source)?);
    }
    Ok(out)
}

fn check_unique(entries: &[GoldenEntry]) -> Result<(), CorpusError> {
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert((e.geometry, e.key)) {
            return Err(CorpusError::Duplicate { geometry: e.geometry, key: e.key });
        }
    }
    Ok(())
}

/// The corpus compiled into the library.
pub fn embedded_corpus() -> &'static [GoldenEntry] {
    static CORPUS: OnceLock<Vec<GoldenEntry>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut all = Vec::new();
        for (name, text) in EMBEDDED {
            let entries = parse_corpus(text, name).unwrap_or_else(|e| panic!("embedded corpus {name}: {e}"));
            all.extend(entries);
        }
        check_unique(&all).expect("embedded corpus keys are unique");
        all
    })
}

/// Raw text of the embedded corpus files, as `(label, text)`.
pub fn embedded_sources() -> &'static [(&'static str, &'static str)] {
    EMBEDDED
}

/// Loads every `*.dsl` file of `dir` in name order.
pub fn load_corpus_dir(dir: &Path) -> Result<Vec<GoldenEntry>, CorpusError> {
    let io = |e: std::io::Error| CorpusError::Io { path: dir.display().to_string(), error: e };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "dsl"))
        .collect();
    files.sort();
    let mut all = Vec::new();
    for path in files {
        all.extend(load_corpus_file(&path)?);
    }
    check_unique(&all)?;
    Ok(all)
}

pub fn load_corpus_file(path: &Path) -> Result<Vec<GoldenEntry>, CorpusError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CorpusError::Io { path: path.display().to_string(), error: e })?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let entries = parse_corpus(&text, &name).map_err(|error| CorpusError::Parse { source_name: name, error })?;
    check_unique(&entries)?;
    Ok(entries)
}

/// The embedded corpus, or the directory named by `SHADOW_GOLDEN_DIR`.
pub fn default_corpus() -> Result<Vec<GoldenEntry>, CorpusError> {
    match std::env::var_os(GOLDEN_DIR_ENV) {
        Some(dir) if !dir.is_empty() => load_corpus_dir(Path::new(&dir)),
        _ => Ok(embedded_corpus().to_vec()),
    }
}

// --- emitters --------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dsl,
    Latex,
    Json,
}

pub fn dsl_header(geometry: Geometry, key: &ShadowKey) -> String {
    format!("[{} {} j={} h={} f={}]", geometry, key.kind, key.j, key.h, key.f)
}

pub fn emit_entry(e: &GoldenEntry, format: Format) -> String {
    match format {
        Format::Dsl => format!("{}\n  {}\n", dsl_header(e.geometry, &e.key), e.poly),
        Format::Latex => format!("{} & = & {}", latex_symbol(&e.key), latex_poly(&e.poly)),
        Format::Json => entry_json(e).to_string(),
    }
}

pub fn entry_json(e: &GoldenEntry) -> Value {
    json!({
        "geometry": e.geometry.name(),
        "kind": e.key.kind.name(),
        "h": e.key.h,
        "j": e.key.j,
        "f": e.key.f,
        "poly": e.poly.to_json(),
    })
}

pub fn latex_symbol(key: &ShadowKey) -> String {
    let sym = match key.kind {
        Kind::Primal => "\\phi",
        Kind::Dual => "\\psi",
    };
    format!("{sym} _{{{},{},{}}}", key.h, key.j, key.f)
}

fn latex_rational_abs(r: &Rational) -> String {
    let r = r.abs();
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

/// `(sign, body)` of a coefficient; unit magnitudes give an empty body.
fn latex_coefficient(c: &ExtScalar) -> (bool, String) {
    if c.b.is_zero() {
        let neg = c.a.is_negative();
        let body = if c.a.abs().is_one() { String::new() } else { latex_rational_abs(&c.a) };
        return (neg, body);
    }
    if c.a.is_zero() {
        let neg = c.b.is_negative();
        let body = if c.b.abs().is_one() {
            "\\sqrt{3}".to_string()
        } else {
            format!("{}\\sqrt{{3}}", latex_rational_abs(&c.b))
        };
        return (neg, body);
    }
    let sign = if c.b.is_negative() { "-" } else { "+" };
    let a = if c.a.is_negative() { format!("-{}", latex_rational_abs(&c.a)) } else { latex_rational_abs(&c.a) };
    (false, format!("\\left({a}{sign}{}\\sqrt{{3}}\\right)", latex_rational_abs(&c.b)))
}

fn latex_angle(k: u32, q: u32) -> String {
    let r = rat(k as i64, q as i64);
    let (n, d) = (r.numer().clone(), r.denom().clone());
    let lead = if n.is_one() { String::new() } else { n.to_string() };
    if d.is_one() {
        format!("{lead}\\varphi")
    } else {
        format!("\\frac{{{lead}\\varphi }}{{{d}}}")
    }
}

/// Ascending frequency, sines before cosines; `0` when empty.
pub fn latex_poly(p: &TrigPoly) -> String {
    let mut out = String::new();
    for (k, t) in p.terms() {
        for (name, c) in [("\\sin", &t.sin), ("\\cos", &t.cos)] {
            if c.is_zero() {
                continue;
            }
            let (neg, body) = latex_coefficient(c);
            if neg {
                out.push('-');
            } else if !out.is_empty() {
                out.push('+');
            }
            if k == 0 {
                // constant term: cos 0 = 1
                out.push_str(if body.is_empty() { "1" } else { &body });
            } else {
                out.push_str(&body);
                out.push_str(name);
                out.push(' ');
                out.push_str(&latex_angle(k, p.freq_den()));
            }
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

// --- verification ----------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub geometry: Geometry,
    pub key: ShadowKey,
    pub source: String,
    pub expected: TrigPoly,
    /// `None` when the table lacks the key.
    pub actual: Option<TrigPoly>,
    pub first_difference: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub total: usize,
    pub matched: usize,
    pub mismatched: usize,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn merge(&mut self, other: VerifyReport) {
        self.total += other.total;
        self.matched += other.matched;
        self.mismatched += other.mismatched;
        self.mismatches.extend(other.mismatches);
    }

    pub fn is_clean(&self) -> bool {
        self.mismatched == 0
    }

    pub fn render(&self) -> String {
        let mut s = format!("total {}  matched {}  mismatched {}\n", self.total, self.matched, self.mismatched);
        for m in &self.mismatches {
            s.push_str(&format!(
                "MISMATCH {} {} [{}]: {}\n",
                m.geometry, m.key, m.source, m.first_difference
            ));
        }
        s
    }
}

/// First differing coefficient, scanning frequencies upward, sine first.
pub fn first_difference(expected: &TrigPoly, actual: &TrigPoly) -> Option<String> {
    let q = expected.freq_den();
    let ks: BTreeSet<u32> = expected.terms().map(|(k, _)| k).chain(actual.terms().map(|(k, _)| k)).collect();
    let zero = ExtScalar::zero();
    for k in ks {
        let e = expected.term(k);
        let a = actual.term(k);
        for (name, pick) in [("sin", 0), ("cos", 1)] {
            let get = |t: Option<&crate::trigpoly::TrigTerm>| -> ExtScalar {
                t.map_or(zero.clone(), |t| if pick == 0 { t.sin.clone() } else { t.cos.clone() })
            };
            let (ev, av) = (get(e), get(a));
            if ev != av {
                return Some(format!("{name} {k}/{q}: expected {ev}, got {av}"));
            }
        }
    }
    if expected.freq_den() != actual.freq_den() {
        return Some("frequency lattices differ".into());
    }
    None
}

/// Exact comparison of `corpus` entries for the table's geometry.
pub fn verify(table: &ShadowTable, corpus: &[GoldenEntry]) -> VerifyReport {
    let g = table.geometry();
    let mut report = VerifyReport::default();
    for e in corpus.iter().filter(|e| e.geometry == g) {
        report.total += 1;
        let actual = table.get(&e.key);
        let diff = match actual {
            None => Some("missing from generated table".to_string()),
            Some(a) => first_difference(&e.poly, a),
        };
        match diff {
            None => report.matched += 1,
            Some(first_difference) => {
                report.mismatched += 1;
                report.mismatches.push(Mismatch {
                    geometry: g,
                    key: e.key,
                    source: e.source.clone(),
                    expected: e.poly.clone(),
                    actual: actual.cloned(),
                    first_difference,
                });
            }
        }
    }
    report
}

/// Solves every key of `corpus` belonging to `geometry`.
pub fn solve_corpus_keys(geometry: Geometry, corpus: &[GoldenEntry]) -> Result<ShadowTable, SolveError> {
    let mut table = ShadowTable::new(geometry);
    for e in corpus.iter().filter(|e| e.geometry == geometry) {
        table.solve(e.key)?;
    }
    Ok(table)
}

/// Solves and verifies `corpus`, geometry by geometry.
pub fn verify_corpus(corpus: &[GoldenEntry]) -> Result<VerifyReport, SolveError> {
    let mut report = VerifyReport::default();
    for g in Geometry::ALL {
        if corpus.iter().any(|e| e.geometry == g) {
            let table = solve_corpus_keys(g, corpus)?;
            report.merge(verify(&table, corpus));
        }
    }
    Ok(report)
}

/// Outcome of plugging a golden entry into its own recursion equation,
/// with the right-hand side built from golden neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Substitution {
    /// Both the ODE residual and the face derivatives vanish exactly.
    Satisfied,
    Violated { ode_residual: TrigPoly, face_derivatives: [ExtScalar; 2] },
    /// A neighbour needed for the right-hand side is not in the corpus.
    MissingNeighbor(ShadowKey),
}

/// Runs the substitution check for every entry of `corpus`.
pub fn substitution_oracle(corpus: &[GoldenEntry]) -> Vec<(GoldenEntry, Substitution)> {
    let mut tables: BTreeMap<Geometry, ShadowTable> = BTreeMap::new();
    for g in Geometry::ALL {
        let entries = corpus.iter().filter(|e| e.geometry == g).map(|e| (e.key, e.poly.clone()));
        tables.insert(g, ShadowTable::from_entries(g, entries));
    }
    corpus
        .iter()
        .map(|e| {
            let table = &tables[&e.geometry];
            (e.clone(), substitute(e, table))
        })
        .collect()
}

fn substitute(e: &GoldenEntry, table: &ShadowTable) -> Substitution {
    let g = e.geometry;
    let rhs = match build_rhs(e.key, table) {
        Ok(r) => r,
        Err(SolveError::MissingDependency(k)) => return Substitution::MissingNeighbor(k),
        Err(other) => panic!("corpus entry {} has an invalid key: {other}", e.key),
    };
    let lambda = if e.key.h == 0 && e.key.f == 0 { g.eigenvalue(e.key.j) } else { e.key.lambda(g) };
    let residual = ode_residual(&lambda, &e.poly, &rhs);
    let faces = neumann_residuals(&e.poly, g);
    if residual.is_zero() && faces.iter().all(ExtScalar::is_zero) {
        Substitution::Satisfied
    } else {
        Substitution::Violated { ode_residual: residual, face_derivatives: faces }
    }
}

/// Rendering of a whole solved table in the requested format, ordered by
/// `(j, h, f)`.
pub fn emit_table(table: &ShadowTable, format: Format) -> String {
    let g = table.geometry();
    let entries: Vec<GoldenEntry> = table
        .entries()
        .map(|(k, p)| GoldenEntry { geometry: g, key: *k, poly: p.clone(), source: String::new() })
        .collect();
    match format {
        Format::Dsl => {
            let mut s = String::new();
            for e in &entries {
                s.push_str(&emit_entry(e, Format::Dsl));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let arr: Vec<Value> = entries.iter().map(entry_json).collect();
            let mut s = serde_json::to_string_pretty(&json!({"geometry": g.name(), "entries": arr}))
                .expect("serializable");
            s.push('\n');
            s
        }
        Format::Latex => {
            // One eqnarray block per (kind, j, h), ascending f.
            let mut s = String::new();
            let mut current: Option<(Kind, u32, u32)> = None;
            for e in &entries {
                let block = (e.key.kind, e.key.j, e.key.h);
                if current != Some(block) {
                    if current.is_some() {
                        s.push_str("\\end{eqnarray}\n\n");
                    }
                    s.push_str("\\begin{eqnarray}\n");
                    current = Some(block);
                }
                s.push_str(&emit_entry(e, Format::Latex));
                s.push_str("\n\\nonumber\\\\\n");
            }
            if current.is_some() {
                s.push_str("\\end{eqnarray}\n");
            }
            s
        }
    }
}

/// `format_rational` re-exported for emitters in other modules.
pub fn rational_text(r: &Rational) -> String {
    format_rational(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let e = parse_entry("[crack primal j=1 h=0 f=1]\n 1/4 sin 1/2").unwrap();
        assert_eq!(e.geometry, Geometry::Crack);
        assert_eq!(e.key, ShadowKey::primal(0, 1, 1));
        assert_eq!(e.poly, TrigPoly::sin_term(2, 1, ExtScalar::from_rational(rat(1, 4))));

        let e = parse_entry("[vnotch90 primal j=1 h=0 f=0]\n 1 sin 2/3 ; 0+1/3r3 cos 2/3").unwrap();
        assert_eq!(e.poly, Geometry::VNotch90.eigenfunction(1));

        let e = parse_entry("[crack dual j=1 h=0 f=4]\n 35/2048 sin 9/2").unwrap();
        assert_eq!(e.key, ShadowKey::dual(0, 1, 4));
        assert_eq!(e.poly, TrigPoly::sin_term(2, 9, ExtScalar::from_rational(rat(35, 2048))));
    }

    #[test]
    fn parse_is_whitespace_insensitive_and_canonicalizing() {
        let a = parse_entry("[vnotch90 dual j=2 h=0 f=0] 1 sin 4/3;0-1/3r3 cos 4/3").unwrap();
        let b = parse_entry("[ vnotch90   dual j = 2 h=0 f=0 ]\n\n  2/2 sin 4/3 ;\n -1/3 r3 cos 4/3\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(emit_entry(&b, Format::Dsl), "[vnotch90 dual j=2 h=0 f=0]\n  1 sin 4/3 ; 0-1/3r3 cos 4/3\n");
        // integer frequency on the thirds lattice
        let c = parse_entry("[vnotch90 primal j=3 h=0 f=0] 1 cos 2").unwrap();
        assert_eq!(c.poly, TrigPoly::cos_term(3, 6, ExtScalar::one()));
        // repeated terms add up; cancellation leaves the empty polynomial
        let d = parse_entry("[crack primal j=1 h=0 f=0] 1 sin 1/2 ; -1 sin 1/2").unwrap();
        assert!(d.poly.is_zero());
        assert_eq!(emit_entry(&d, Format::Dsl), "[crack primal j=1 h=0 f=0]\n  0\n");
    }

    #[test]
    fn parse_errors_have_positions() {
        let e = parse_entry("[crack primal j=1 h=0 f=1]\n 1/4 tan 1/2").unwrap_err();
        assert_eq!((e.line, e.col), (2, 6));
        assert!(e.message.contains("`sin` or `cos`"), "{e}");

        let e = parse_entry("[crack primal j=1 h=0]\n 1 sin 1/2").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("`f=`"), "{e}");

        let e = parse_entry("[crack primal j=1 h=0 f=0] 1 sin 1/3").unwrap_err();
        assert!(e.message.contains("1/2"), "{e}");

        let e = parse_entry("[wedge primal j=1 h=0 f=0] 1 sin 1/2").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));

        let e = parse_entry("[crack primal j=1 h=1 f=0] 1 sin 1/2").unwrap_err();
        assert!(e.message.contains("even"), "{e}");

        let e = parse_entry("[crack primal j=1 h=0 f=0] 1+2 sin 1/2").unwrap_err();
        assert!(e.message.contains("`r3`"), "{e}");

        let e = parse_entry("[crack primal j=1 h=0 f=0] 1 sin 1/2 $").unwrap_err();
        assert!(e.message.contains("unexpected character"), "{e}");

        assert!(parse_entry("").is_err());
        assert!(parse_entry("[crack primal j=1 h=0 f=0] 1 sin 1/0").is_err());
    }

    #[test]
    fn latex_emission() {
        let e = GoldenEntry {
            geometry: Geometry::Crack,
            key: ShadowKey::primal(0, 3, 0),
            poly: Geometry::Crack.eigenfunction(3),
            source: String::new(),
        };
        assert_eq!(emit_entry(&e, Format::Latex), "\\phi _{0,3,0} & = & \\sin \\frac{3\\varphi }{2}");
        assert_eq!(latex_poly(&TrigPoly::zero(2)), "0");
        let p = parse_entry("[vnotch90 primal j=2 h=0 f=1] 0-1/4r3 sin 1/3 ; 1/8 cos 1/3 ; 3/32 cos 0 ; 1/2+1/2r3 cos 2").unwrap();
        assert_eq!(
            latex_poly(&p.poly),
            "\\frac{3}{32}-\\frac{1}{4}\\sqrt{3}\\sin \\frac{\\varphi }{3}+\\frac{1}{8}\\cos \\frac{\\varphi }{3}\
             +\\left(\\frac{1}{2}+\\frac{1}{2}\\sqrt{3}\\right)\\cos 2\\varphi"
        );
    }

    #[test]
    fn json_emission_is_stable() {
        let e = parse_entry("[crack dual j=1 h=0 f=1] -1/4 sin 3/2").unwrap();
        assert_eq!(
            emit_entry(&e, Format::Json),
            r#"{"f":1,"geometry":"crack","h":0,"j":1,"kind":"dual","poly":{"freq_den":2,"terms":[{"cos":["0","0"],"num":3,"sin":["-1/4","0"]}]}}"#
        );
    }

    #[test]
    fn embedded_corpus_layout() {
        let c = embedded_corpus();
        assert_eq!(c.len(), 422);
        let count = |g: Geometry, kind: Kind, j: u32| c.iter().filter(|e| e.geometry == g && e.key.kind == kind && e.key.j == j).count();
        assert_eq!(count(Geometry::Crack, Kind::Primal, 1), 36);
        assert_eq!(count(Geometry::Crack, Kind::Dual, 1), 15);
        assert_eq!(count(Geometry::VNotch90, Kind::Primal, 1), 36);
        assert_eq!(count(Geometry::VNotch90, Kind::Dual, 1), 15);
        let anchor = c.iter().find(|e| e.geometry == Geometry::Crack && e.key == ShadowKey::primal(0, 1, 10)).unwrap();
        let top = anchor.poly.term(19).unwrap();
        assert_eq!(top.sin.to_string(), "-46189/268435456");
    }

    #[test]
    fn verify_detects_corruption() {
        let mut table = ShadowTable::new(Geometry::Crack);
        table.solve(ShadowKey::primal(2, 1, 1)).unwrap();
        let good = parse_entry("[crack primal j=1 h=2 f=1] -1/8 sin 1/2 ; 7/60 sin 3/2").unwrap();
        let bad = parse_entry("[crack primal j=1 h=2 f=0] -1/7 sin 1/2").unwrap();
        let missing = parse_entry("[crack primal j=3 h=0 f=0] 1 sin 3/2").unwrap();
        let r = verify(&table, std::slice::from_ref(&good));
        assert_eq!((r.total, r.matched, r.mismatched), (1, 1, 0));
        let r = verify(&table, &[good, bad, missing]);
        assert_eq!((r.total, r.matched, r.mismatched), (3, 1, 2));
        assert_eq!(r.mismatches[0].first_difference, "sin 1/2: expected -1/7, got -1/6");
        assert!(r.mismatches[1].actual.is_none());
        assert_eq!(verify(&table, &[]).total, 0);
    }

    #[test]
    fn substitution_flags_bad_entry() {
        let corpus = parse_corpus(
            "[crack primal j=1 h=0 f=0] 1 sin 1/2\n[crack primal j=1 h=0 f=1] 1/4 sin 1/2\n[crack primal j=1 h=2 f=0] -1/5 sin 1/2\n[crack primal j=1 h=2 f=2] 1 sin 1/2",
            "t",
        )
        .unwrap();
        let out = substitution_oracle(&corpus);
        assert_eq!(out[0].1, Substitution::Satisfied);
        assert_eq!(out[1].1, Substitution::Satisfied);
        assert!(matches!(out[2].1, Substitution::Violated { .. }));
        assert_eq!(out[3].1, Substitution::MissingNeighbor(ShadowKey::primal(2, 1, 1)));
    }
}
