//! Command-line front end: input parsing, dispatch and the text report.
//!
//! The report is a sequence of `key: value` lines and indented matrix
//! blocks. Numbers use a fixed 12-digit format so that reports can be
//! diffed; the probability table uses shortest round-trip notation.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use crate::certify::{certify_general, certify_ising, certify_ising_table, KktCertificate, Tolerances};
use crate::error::{Error, Result};
use crate::general_mle::{existence_general, existence_symmetric, solve_general, GENERAL_MAX_DIM};
use crate::ips::{fit, fit_symmetric, preflight_existence, FitOptions, FitResult};
use crate::ising::Graph;
use crate::states::{ensure_dim, state_count, DEFAULT_MAX_DIM};
use crate::tables::{is_mtp2, log_likelihood, moments_from_counts, Moments, ProbTable, SampleCounts};

/// Tables are printed in full up to this dimension.
pub const TABLE_PRINT_MAX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Rows of -1/1 values.
    Pm1,
    /// Rows of 0/1 values, 0 meaning -1.
    #[value(name = "01")]
    ZeroOne,
    /// Lines `mask,count`, bit `v-1` of the mask set iff `x_v = 1`.
    Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sign-constrained Ising MLE on a graph.
    Fit,
    /// MLE over all MTP2 binary distributions.
    FitGeneral,
    /// Ising MLE without external field.
    FitSymmetric,
    /// Test the MTP2 inequalities on the empirical (or given) table.
    CheckMtp2,
    /// Test whether the MLE exists.
    CheckExistence,
    /// Certify a fitted or supplied table.
    Certify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::FitGeneral => "fit-general",
            Command::FitSymmetric => "fit-symmetric",
            Command::CheckMtp2 => "check-mtp2",
            Command::CheckExistence => "check-existence",
            Command::Certify => "certify",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "mtp2", version, about = "MTP2 and ferromagnetic Ising maximum likelihood")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Sample file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Sample format; detected from the contents when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Edge-list file or the keyword `complete`.
    #[arg(long, global = true)]
    pub graph: Option<String>,
    /// Number of variables for headerless counts files.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub epsilon: f64,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol_primal: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol_dual: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol_slack: f64,
    /// Use the family without external field.
    #[arg(long, global = true)]
    pub symmetric: bool,
    /// Use the unrestricted MTP2 family.
    #[arg(long, global = true)]
    pub general: bool,
    /// Report destination; standard output when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 10_000)]
    pub max_sweeps: usize,
    /// Probability table (`mask,prob` lines) for `certify` and `check-mtp2`.
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            format: None,
            graph: None,
            dim: None,
            epsilon: 1e-10,
            tol_primal: 1e-8,
            tol_dual: 1e-7,
            tol_slack: 1e-7,
            symmetric: false,
            general: false,
            output: None,
            max_sweeps: 10_000,
            table: None,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances { primal: self.tol_primal, dual: self.tol_dual, slackness: self.tol_slack }
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions { epsilon: self.epsilon, max_sweeps: self.max_sweeps, ..Default::default() }
    }
}

/// Exit status plus report text.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
    pub warnings: Vec<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_MLE: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect()
}

fn dim_header(line: &str) -> Option<&str> {
    line.strip_prefix('#')?.trim().strip_prefix("dim=").map(str::trim)
}

/// Parses a sample in any of the supported formats.
pub fn parse_sample(text: &str, format: Option<Format>, dim: Option<usize>) -> Result<SampleCounts> {
    let header_dim = text.lines().find_map(dim_header);
    let format = match format {
        Some(f) => f,
        None if header_dim.is_some() => Format::Counts,
        None => detect_alphabet(text)?,
    };
    match format {
        Format::Counts => parse_counts(text, dim),
        f => parse_rows(text, f),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn detect_alphabet(text: &str) -> Result<Format> {
    let mut minus = false;
    let mut zero = false;
    for (line, l) in data_lines(text) {
        for tok in fields(l) {
            match tok {
                "-1" => minus = true,
                "0" => zero = true,
                "1" | "+1" => {}
                _ if line == first_data_line(text) => break,
                _ => return Err(parse_err(line, format!("unexpected value {tok:?}"))),
            }
        }
    }
    match (minus, zero) {
        (true, true) => Err(parse_err(0, "mixed alphabets: both -1 and 0 present")),
        (false, true) => Ok(Format::ZeroOne),
        _ => Ok(Format::Pm1),
    }
}

fn first_data_line(text: &str) -> usize {
    data_lines(text).next().map(|(k, _)| k).unwrap_or(0)
}

fn is_header(l: &str) -> bool {
    fields(l).iter().any(|t| t.parse::<f64>().is_err())
}

fn parse_rows(text: &str, format: Format) -> Result<SampleCounts> {
    let mut rows: Vec<(usize, u32)> = Vec::new();
    let mut width = None;
    for (k, (line, l)) in data_lines(text).enumerate() {
        if k == 0 && is_header(l) {
            continue;
        }
        let toks = fields(l);
        let w = *width.get_or_insert(toks.len());
        if toks.len() != w {
            return Err(parse_err(line, format!("ragged row: expected {w} values, found {}", toks.len())));
        }
        if w > DEFAULT_MAX_DIM {
            return Err(Error::DimensionTooLarge { dim: w, cap: DEFAULT_MAX_DIM });
        }
        let mut bits = 0u32;
        for (v, tok) in toks.iter().enumerate() {
            let plus = match (format, *tok) {
                (Format::Pm1, "1" | "+1") | (Format::ZeroOne, "1") => true,
                (Format::Pm1, "-1") | (Format::ZeroOne, "0") => false,
                (Format::Pm1, "0") | (Format::ZeroOne, "-1") => {
                    return Err(parse_err(line, "mixed alphabets"));
                }
                _ => return Err(parse_err(line, format!("unexpected value {tok:?}"))),
            };
            bits |= (plus as u32) << v;
        }
        rows.push((line, bits));
    }
    let d = width.ok_or(Error::EmptySample)?;
    let mut counts = vec![0u64; state_count(d)];
    for (_, bits) in rows {
        counts[bits as usize] += 1;
    }
    SampleCounts::new(d, counts)
}

fn parse_counts(text: &str, dim: Option<usize>) -> Result<SampleCounts> {
    let header = text.lines().find_map(dim_header);
    let header = header
        .map(|h| h.parse::<usize>().map_err(|_| parse_err(0, format!("bad dim header {h:?}"))))
        .transpose()?;
    let mut entries: Vec<(usize, u32, u64)> = Vec::new();
    for (line, l) in data_lines(text) {
        let toks = fields(l);
        if toks.len() != 2 {
            return Err(parse_err(line, "expected `mask,count`"));
        }
        let mask = toks[0].parse::<u32>().map_err(|_| parse_err(line, format!("bad mask {:?}", toks[0])))?;
        let count = toks[1].parse::<u64>().map_err(|_| parse_err(line, format!("bad count {:?}", toks[1])))?;
        entries.push((line, mask, count));
    }
    let d = match (header, dim) {
        (Some(h), Some(g)) if h != g => return Err(Error::DimensionMismatch { expected: g, found: h }),
        (Some(h), _) | (None, Some(h)) => h,
        (None, None) => {
            let top = entries.iter().map(|e| e.1).max().ok_or(Error::EmptySample)?;
            (32 - top.leading_zeros()).max(1) as usize
        }
    };
    ensure_dim(d, DEFAULT_MAX_DIM)?;
    let mut counts = vec![0u64; state_count(d)];
    for (line, mask, count) in entries {
        if (mask as usize) >= counts.len() {
            return Err(parse_err(line, format!("mask {mask} out of range for dim {d}")));
        }
        counts[mask as usize] =
            counts[mask as usize].checked_add(count).ok_or_else(|| parse_err(line, "count overflow"))?;
    }
    counts.iter().try_fold(0u64, |a, &b| a.checked_add(b)).ok_or_else(|| parse_err(0, "count overflow"))?;
    SampleCounts::new(d, counts)
}

/// Parses `mask,prob` lines as written in the report.
pub fn parse_table(text: &str, dim: Option<usize>) -> Result<ProbTable> {
    let header = text.lines().find_map(dim_header);
    let header = header
        .map(|h| h.parse::<usize>().map_err(|_| parse_err(0, format!("bad dim header {h:?}"))))
        .transpose()?;
    let d = header.or(dim).ok_or_else(|| parse_err(0, "table needs a `# dim=<d>` header or --dim"))?;
    ensure_dim(d, DEFAULT_MAX_DIM)?;
    let mut values = vec![0.0; state_count(d)];
    for (line, l) in data_lines(text) {
        let toks = fields(l);
        if toks.len() != 2 {
            return Err(parse_err(line, "expected `mask,prob`"));
        }
        let mask = toks[0].parse::<usize>().map_err(|_| parse_err(line, format!("bad mask {:?}", toks[0])))?;
        let p = toks[1].parse::<f64>().map_err(|_| parse_err(line, format!("bad probability {:?}", toks[1])))?;
        if mask >= values.len() {
            return Err(parse_err(line, format!("mask {mask} out of range for dim {d}")));
        }
        values[mask] = p;
    }
    ProbTable::new(d, values)
}

/// Parses an edge list (`i j` per line, 1-indexed) or the keyword
/// `complete`. Duplicate edges are reported as warnings.
pub fn parse_graph(text: &str, d: usize) -> Result<(Graph, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut g = Graph::empty(d);
    for (line, l) in data_lines(text) {
        if l == "complete" {
            return Ok((Graph::complete(d), warnings));
        }
        let toks = fields(l);
        if toks.len() != 2 {
            return Err(parse_err(line, "expected `i j`"));
        }
        let mut ends = [0usize; 2];
        for (k, t) in toks.iter().enumerate() {
            let v = t.parse::<usize>().map_err(|_| parse_err(line, format!("bad vertex {t:?}")))?;
            if v == 0 || v > d {
                return Err(parse_err(line, format!("vertex {v} out of range 1..={d}")));
            }
            ends[k] = v - 1;
        }
        if ends[0] == ends[1] {
            return Err(parse_err(line, format!("self-loop at vertex {}", ends[0] + 1)));
        }
        if !g.add_edge(ends[0], ends[1])? {
            warnings.push(format!("line {line}: duplicate edge {}-{} ignored", toks[0], toks[1]));
        }
    }
    Ok((g, warnings))
}

fn num(v: f64) -> String {
    let s = format!("{v:.12}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

struct Report {
    out: String,
}

impl Report {
    fn new(command: Command) -> Self {
        let mut r = Report { out: String::new() };
        r.kv("command", command.name());
        r
    }

    fn kv(&mut self, key: &str, value: impl std::fmt::Display) {
        writeln!(self.out, "{key}: {value}").unwrap();
    }

    fn vector(&mut self, key: &str, v: &DVector<f64>) {
        let s: Vec<String> = v.iter().map(|&x| num(x)).collect();
        self.kv(key, s.join(" "));
    }

    fn matrix(&mut self, key: &str, m: &DMatrix<f64>) {
        writeln!(self.out, "{key}:").unwrap();
        for r in 0..m.nrows() {
            let s: Vec<String> = m.row(r).iter().map(|&x| num(x)).collect();
            writeln!(self.out, "  {}", s.join(" ")).unwrap();
        }
    }

    fn moments(&mut self, m: &Moments) {
        self.vector("mu", &m.mean);
        self.matrix("Xi", &m.second);
        self.matrix("Sigma", &m.covariance());
    }

    fn certificate(&mut self, c: &KktCertificate) {
        writeln!(self.out, "certificate:").unwrap();
        for line in c.to_string().lines() {
            writeln!(self.out, "  {line}").unwrap();
        }
        self.kv("certified", c.pass());
    }

    fn table(&mut self, p: &ProbTable) {
        if p.dim() > TABLE_PRINT_MAX_DIM {
            self.kv("table", "omitted");
            return;
        }
        writeln!(self.out, "table:").unwrap();
        writeln!(self.out, "  # dim={}", p.dim()).unwrap();
        for (m, v) in p.values().iter().enumerate() {
            writeln!(self.out, "  {m},{v:e}").unwrap();
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    warnings: Vec<String>,
}

impl Ctx {
    fn read(&self, path: &PathBuf) -> Result<String> {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    fn sample(&self) -> Result<SampleCounts> {
        let path = self.cfg.input.as_ref().ok_or_else(|| parse_err(0, "--input is required"))?;
        parse_sample(&self.read(path)?, self.cfg.format, self.cfg.dim)
    }

    fn graph(&mut self, d: usize) -> Result<Graph> {
        match self.cfg.graph.as_deref() {
            None => {
                self.warnings.push("no --graph given; using the complete graph".into());
                Ok(Graph::complete(d))
            }
            Some("complete") => Ok(Graph::complete(d)),
            Some(path) => {
                let (g, w) = parse_graph(&self.read(&PathBuf::from(path))?, d)?;
                self.warnings.extend(w);
                Ok(g)
            }
        }
    }

    fn supplied_table(&self, d: usize) -> Result<Option<ProbTable>> {
        let Some(path) = self.cfg.table.as_ref() else { return Ok(None) };
        let p = parse_table(&self.read(path)?, Some(d))?;
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Some(p))
    }
}

fn header(r: &mut Report, c: &SampleCounts) {
    r.kv("d", c.dim());
    r.kv("n", c.n());
}

fn ising_report(r: &mut Report, res: &FitResult, c: &SampleCounts, g: &Graph, cert: &KktCertificate) {
    r.kv("graph", g);
    r.kv("positive_edges", &res.positive_graph);
    r.kv("fitted_edges", &res.fitted_graph);
    r.kv("converged", res.converged);
    r.kv("sweeps", res.sweeps);
    r.kv("log_likelihood", num(log_likelihood(&res.table, c)));
    r.vector("h", &res.params.h);
    r.matrix("J", &res.params.j);
    r.moments(&res.moments());
    r.certificate(cert);
    r.table(&res.table);
}

fn status(converged: bool, cert: &KktCertificate) -> i32 {
    if converged && cert.pass() {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    }
}

fn symmetric_moments(c: &SampleCounts) -> Moments {
    let mut m = moments_from_counts(c);
    m.mean.fill(0.0);
    m
}

fn run_fit(ctx: &mut Ctx, r: &mut Report, symmetric: bool) -> Result<i32> {
    let c = ctx.sample()?;
    let g = ctx.graph(c.dim())?;
    header(r, &c);
    let opts = ctx.cfg.fit_options();
    let (res, m) = if symmetric {
        (fit_symmetric(&c, &g, &opts)?, symmetric_moments(&c))
    } else {
        (fit(&c, &g, &opts)?, moments_from_counts(&c))
    };
    r.kv("family", if symmetric { "ising-symmetric" } else { "ising" });
    let cert = certify_ising(&res, &m, &g, &ctx.cfg.tolerances())?;
    ising_report(r, &res, &c, &g, &cert);
    Ok(status(res.converged, &cert))
}

fn run_general(ctx: &mut Ctx, r: &mut Report) -> Result<i32> {
    let c = ctx.sample()?;
    if c.dim() > GENERAL_MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: c.dim(), cap: GENERAL_MAX_DIM });
    }
    header(r, &c);
    let res = solve_general(&c, &ctx.cfg.tolerances())?;
    r.kv("family", "mtp2");
    r.kv("support_size", res.support.len());
    r.kv("converged", res.converged);
    r.kv("outer_iterations", res.outer_iterations);
    r.kv("newton_steps", res.newton_steps);
    r.kv("log_likelihood", num(res.log_likelihood));
    r.moments(&Moments::from_table(&res.table));
    r.certificate(&res.certificate);
    r.table(&res.table);
    Ok(status(res.converged, &res.certificate))
}

fn run_check_mtp2(ctx: &mut Ctx, r: &mut Report) -> Result<i32> {
    let p = match ctx.cfg.input {
        Some(_) => {
            let c = ctx.sample()?;
            header(r, &c);
            ctx.supplied_table(c.dim())?.unwrap_or_else(|| ProbTable::empirical(&c))
        }
        None => {
            let path = ctx.cfg.table.clone().ok_or_else(|| parse_err(0, "--input or --table is required"))?;
            let p = parse_table(&ctx.read(&path)?, ctx.cfg.dim)?;
            r.kv("d", p.dim());
            p
        }
    };
    let check = is_mtp2(&p, crate::tables::DEFAULT_MTP2_TOL);
    r.kv("mtp2", check.holds);
    r.kv("violations", check.violations.len());
    for v in check.violations.iter().take(20) {
        writeln!(r.out, "  p({})p({}) < p({})p({}) by {:e}", v.x.meet(v.y)?, v.x.join(v.y)?, v.x, v.y, -v.gap)
            .unwrap();
    }
    Ok(EXIT_OK)
}

fn run_check_existence(ctx: &mut Ctx, r: &mut Report) -> Result<i32> {
    let c = ctx.sample()?;
    header(r, &c);
    let (family, exists, offending, closure) = if ctx.cfg.general {
        let e = existence_general(&c);
        ("mtp2", e.exists, e.offending, e.closure)
    } else if ctx.cfg.symmetric {
        let e = existence_symmetric(&c);
        ("ising-symmetric", e.exists, e.offending, e.closure)
    } else {
        let g = ctx.graph(c.dim())?;
        r.kv("graph", &g);
        let pre = preflight_existence(&c, &g)?;
        ("ising", pre.ok, pre.offending, None)
    };
    r.kv("family", family);
    r.kv("mle_exists", exists);
    if let Some(cl) = closure {
        r.kv("closure_criterion", cl);
    }
    let pairs: Vec<String> = offending.iter().map(|(a, b)| format!("{}-{}", a + 1, b + 1)).collect();
    r.kv("offending_pairs", pairs.join(" "));
    Ok(if exists { EXIT_OK } else { EXIT_NO_MLE })
}

fn run_certify(ctx: &mut Ctx, r: &mut Report) -> Result<i32> {
    let c = ctx.sample()?;
    header(r, &c);
    let tol = ctx.cfg.tolerances();
    let supplied = ctx.supplied_table(c.dim())?;
    if ctx.cfg.general {
        r.kv("family", "mtp2");
        let p = match supplied {
            Some(p) => p,
            None => solve_general(&c, &tol)?.table,
        };
        let cert = certify_general(&p, &c, &tol)?;
        r.certificate(&cert);
        return Ok(status(true, &cert));
    }
    let g = ctx.graph(c.dim())?;
    let m = if ctx.cfg.symmetric { symmetric_moments(&c) } else { moments_from_counts(&c) };
    r.kv("family", if ctx.cfg.symmetric { "ising-symmetric" } else { "ising" });
    r.kv("graph", &g);
    let cert = match supplied {
        Some(p) => certify_ising_table(&p, &m, &g, &tol)?,
        None => {
            let opts = ctx.cfg.fit_options();
            let res = if ctx.cfg.symmetric { fit_symmetric(&c, &g, &opts)? } else { fit(&c, &g, &opts)? };
            certify_ising(&res, &m, &g, &tol)?
        }
    };
    r.certificate(&cert);
    Ok(status(true, &cert))
}

fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return Err(parse_err(0, "--epsilon must be positive"));
    }
    if cfg.symmetric && cfg.general {
        return Err(parse_err(0, "--symmetric and --general are exclusive"));
    }
    Ok(())
}

/// Runs one command. Errors become exit code 1, or 2 when the MLE does
/// not exist, with the message in the report.
pub fn run(cfg: RunConfig) -> Outcome {
    let command = cfg.command;
    let mut ctx = Ctx { cfg, warnings: Vec::new() };
    let mut r = Report::new(command);
    let result = validate(&ctx.cfg).and_then(|_| match command {
        Command::Fit if ctx.cfg.general => run_general(&mut ctx, &mut r),
        Command::Fit if ctx.cfg.symmetric => run_fit(&mut ctx, &mut r, true),
        Command::Fit => run_fit(&mut ctx, &mut r, false),
        Command::FitGeneral => run_general(&mut ctx, &mut r),
        Command::FitSymmetric => run_fit(&mut ctx, &mut r, true),
        Command::CheckMtp2 => run_check_mtp2(&mut ctx, &mut r),
        Command::CheckExistence => run_check_existence(&mut ctx, &mut r),
        Command::Certify => run_certify(&mut ctx, &mut r),
    });
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            r.kv("error", &e);
            match e {
                Error::MleDoesNotExist(_) => EXIT_NO_MLE,
                _ => EXIT_INPUT,
            }
        }
    };
    Outcome { code, report: r.out, warnings: ctx.warnings }
}
