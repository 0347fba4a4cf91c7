//! Command-line front end: argument parsing, file I/O and report rendering.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use macup::upgrader::{degrade_full, UpgradeOptions};
use macup::{
    build_bins, gen_random, mac_to_text, parse_mac, polar_profile, upgrade_with,
    verify_construction, verify_partial_information, verify_upgrade, Check, Diagnostics, Mac,
    RegionPartition, VerificationReport,
};

/// Exit code on success or a passing verification.
pub const EXIT_OK: i32 = 0;
/// Exit code when a verification check fails.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for bad arguments or unreadable input.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Channel(#[from] macup::Error),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Channel(macup::Error::Internal(_)) => EXIT_FAILED,
            _ => EXIT_USAGE,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "macup",
    version,
    about = "Upgraded and degraded approximations of multiple-access channels"
)]
struct Cli {
    /// Output format of the report printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct MuArg {
    /// Fidelity parameter (at least 5, and at least q(q-1) for upgrading).
    #[arg(long)]
    mu: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the quantization regions of [0, 1].
    Regions {
        #[command(flatten)]
        mu: MuArg,
        /// Print the region table in the given format.
        #[arg(long, value_enum)]
        dump: Option<Format>,
    },
    /// List the bins of a channel.
    Bins {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        dump: Option<Format>,
    },
    /// Compute the upgraded approximation.
    Upgrade {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the channel that recovers the input from the output.
        #[arg(long)]
        intermediate: Option<PathBuf>,
        /// Append a one-line CSV summary.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute the degraded approximation.
    Degrade {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Upgrade a channel and check every guarantee.
    Verify {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long = "in")]
        input: PathBuf,
        /// Also check I(X_A; X_B, Y) against the upgrade, e.g. `A=1 B=2`.
        #[arg(long = "partial-info", num_args = 1..=2, value_name = "SET")]
        partial_info: Option<Vec<String>>,
        /// Same as `--format json`.
        #[arg(long)]
        json: bool,
    },
    /// Print the sum-rate of a channel.
    Sumrate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Bound the synthetic channels of a polar code.
    Polar {
        #[command(flatten)]
        mu: MuArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        levels: u32,
        /// CSV file for the per-index bounds.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded random channel.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        #[arg(long, default_value_t = 1)]
        users: usize,
        #[arg(long)]
        outputs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> CliResult<i32> {
    let format = cli.format;
    match cli.command {
        Command::Regions { mu, dump } => regions(mu.mu, dump.unwrap_or(format), out),
        Command::Bins { mu, input, dump } => bins(mu.mu, &input, dump.unwrap_or(format), out),
        Command::Upgrade {
            mu,
            input,
            out: path,
            intermediate,
            report,
        } => {
            let w = read_mac(&input)?;
            let res = upgrade_with(&w, mu.mu, UpgradeOptions::default())?;
            write_file(&path, &mac_to_text(&res.upgraded))?;
            if let Some(p) = intermediate {
                write_file(&p, &res.intermediate.to_text())?;
            }
            finish_approximation(&res.diagnostics, report.as_deref(), format, out)
        }
        Command::Degrade {
            mu,
            input,
            out: path,
            report,
        } => {
            let w = read_mac(&input)?;
            let res = degrade_full(&w, mu.mu)?;
            write_file(&path, &mac_to_text(&res.degraded))?;
            finish_approximation(&res.diagnostics, report.as_deref(), format, out)
        }
        Command::Verify {
            mu,
            input,
            partial_info,
            json,
        } => {
            let format = if json { Format::Json } else { format };
            verify(mu.mu, &input, partial_info.as_deref(), format, out)
        }
        Command::Sumrate { input } => sumrate(&input, format, out),
        Command::Polar {
            mu,
            input,
            levels,
            out: path,
        } => polar(mu.mu, &input, levels, path.as_deref(), format, out),
        Command::Gen {
            seed,
            alphabet,
            users,
            outputs,
            out: path,
        } => {
            let w = gen_random(seed, alphabet, users, outputs)?;
            let text = mac_to_text(&w);
            match path {
                Some(p) => write_file(&p, &text)?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
    }
}

fn read_mac(path: &Path) -> CliResult<Mac> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mac(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json_line<T: Serialize>(value: &T, out: &mut dyn Write) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_rows<R: Serialize>(rows: impl IntoIterator<Item = R>, out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn regions(mu: f64, format: Format, out: &mut dyn Write) -> CliResult<i32> {
    let part = RegionPartition::build(mu)?;
    let table = part.table();
    match format {
        Format::Text => {
            writeln!(out, "M={}", part.regions())?;
            writeln!(
                out,
                "{:>6} {:>22} {:>22} {:>22} {:>22}",
                "i", "b_i", "b_next", "width", "eta_increment"
            )?;
            for r in &table {
                writeln!(
                    out,
                    "{:>6} {:>22.17} {:>22.17} {:>22.17} {:>22.17}",
                    r.index, r.left, r.right, r.width, r.eta_increment
                )?;
            }
        }
        Format::Csv => csv_rows(&table, out)?,
        Format::Json => {
            #[derive(Serialize)]
            struct Regions<'a> {
                mu: f64,
                regions: usize,
                table: &'a [macup::quantizer::RegionRow],
                check: macup::PartitionReport,
            }
            json_line(
                &Regions {
                    mu,
                    regions: part.regions(),
                    table: &table,
                    check: part.check(),
                },
                out,
            )?;
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BinRow {
    label: String,
    key: String,
    members: String,
    leading_input: usize,
    psi: String,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

fn bins(mu: f64, input: &Path, format: Format, out: &mut dyn Write) -> CliResult<i32> {
    let w = read_mac(input)?;
    let part = RegionPartition::build(mu)?;
    let binning = build_bins(&w, &part)?;
    let rows: Vec<BinRow> = binning
        .bins()
        .iter()
        .enumerate()
        .map(|(k, b)| BinRow {
            label: macup::Binning::label(k),
            key: b.key.to_string(),
            members: join(b.members.iter().map(|&y| w.label(y)), " "),
            leading_input: b.leading_input,
            psi: join(b.psi.iter().map(|p| format!("{p:?}")), " "),
        })
        .collect();
    match format {
        Format::Text => {
            writeln!(out, "{} letters in {} bins", w.len(), rows.len())?;
            for r in &rows {
                writeln!(
                    out,
                    "{} key={} x*={} psi=[{}] members=[{}]",
                    r.label, r.key, r.leading_input, r.psi, r.members
                )?;
            }
        }
        Format::Csv => csv_rows(&rows, out)?,
        Format::Json => json_line(&rows, out)?,
    }
    Ok(EXIT_OK)
}

/// Report columns shared by `upgrade` and `degrade`.
#[derive(Serialize)]
struct SummaryRow {
    q: usize,
    t: usize,
    #[serde(rename = "Y")]
    outputs: usize,
    mu: f64,
    bins: usize,
    boosts: usize,
    #[serde(rename = "R_W_nats")]
    rate_original: f64,
    #[serde(rename = "R_Q_nats")]
    rate_approx: f64,
    gap: f64,
    bound: f64,
    alphabet_bound: f64,
}

impl From<&Diagnostics> for SummaryRow {
    fn from(d: &Diagnostics) -> Self {
        SummaryRow {
            q: d.inputs,
            t: d.users,
            outputs: d.outputs,
            mu: d.mu,
            bins: d.bins,
            boosts: d.boosts,
            rate_original: d.rate_original,
            rate_approx: d.rate_approx,
            gap: d.gap,
            bound: d.bound,
            alphabet_bound: d.alphabet_bound,
        }
    }
}

fn finish_approximation(
    d: &Diagnostics,
    report: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let row = SummaryRow::from(d);
    if let Some(path) = report {
        let mut buf = Vec::new();
        csv_rows([&row], &mut buf)?;
        write_file(path, &String::from_utf8_lossy(&buf))?;
    }
    match format {
        Format::Text => {
            writeln!(
                out,
                "{} letters -> {} bins + {} boosts",
                d.outputs, d.bins, d.boosts
            )?;
            writeln!(out, "R(W) = {:.9} nats", d.rate_original)?;
            writeln!(out, "R(Q) = {:.9} nats", d.rate_approx)?;
            writeln!(out, "gap  = {:.3e} (bound {:.3e})", d.gap, d.bound)?;
        }
        Format::Csv => csv_rows([&row], out)?,
        Format::Json => json_line(d, out)?,
    }
    Ok(EXIT_OK)
}

/// Parses `A=1,2` / `B=` style user sets into zero-based indices.
fn parse_user_sets(args: &[String], users: usize) -> CliResult<(Vec<usize>, Vec<usize>)> {
    let mut a = None;
    let mut b = Vec::new();
    for arg in args {
        let (name, list) = arg
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("`{arg}` is not of the form A=.. or B=..")))?;
        let set = list
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| match s.trim().parse::<usize>() {
                Ok(u) if (1..=users).contains(&u) => Ok(u - 1),
                _ => Err(CliError::Usage(format!("user `{s}` is not in 1..={users}"))),
            })
            .collect::<CliResult<Vec<_>>>()?;
        match name {
            "A" | "a" => a = Some(set),
            "B" | "b" => b = set,
            _ => return Err(CliError::Usage(format!("unknown user set `{name}`"))),
        }
    }
    let a = a.ok_or_else(|| CliError::Usage("missing A=..".into()))?;
    Ok((a, b))
}

fn verify(
    mu: f64,
    input: &Path,
    partial: Option<&[String]>,
    format: Format,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let w = read_mac(input)?;
    let sets = partial.map(|p| parse_user_sets(p, w.users())).transpose()?;
    let opts = UpgradeOptions {
        keep_unconsolidated: true,
    };
    let res = upgrade_with(&w, mu, opts)?;
    let mut report = verify_upgrade(&w, &res, mu)?;
    report.extend(verify_construction(&w, &res, mu)?);
    let lower = degrade_full(&w, mu)?.degraded.sum_rate();
    report.extend(VerificationReport::new(vec![Check::at_most(
        "degraded_rate_below_original",
        lower - w.sum_rate(),
        1e-9,
    )]));
    if let Some((a, b)) = sets {
        report.extend(verify_partial_information(&w, &res.upgraded, &a, &b)?);
    }

    match format {
        Format::Text => {
            for c in &report.checks {
                writeln!(
                    out,
                    "{} {:<40} measured={:<12.4e} bound={:<12.4e} slack={:.4e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.bound,
                    c.slack
                )?;
            }
            writeln!(
                out,
                "{}",
                if report.pass {
                    "all checks passed"
                } else {
                    "verification FAILED"
                }
            )?;
        }
        Format::Csv => csv_rows(&report.checks, out)?,
        Format::Json => json_line(&report, out)?,
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

fn sumrate(input: &Path, format: Format, out: &mut dyn Write) -> CliResult<i32> {
    let w = read_mac(input)?;
    let nats = w.sum_rate();
    let bits = nats / std::f64::consts::LN_2;
    #[derive(Serialize)]
    struct Rate {
        nats: f64,
        bits: f64,
    }
    match format {
        Format::Text => writeln!(out, "{nats:.6} nats ({bits:.6} bits)")?,
        Format::Csv => csv_rows([Rate { nats, bits }], out)?,
        Format::Json => json_line(&Rate { nats, bits }, out)?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PolarRow {
    index: usize,
    lower_nats: f64,
    upper_nats: f64,
    gap: f64,
}

fn polar(
    mu: f64,
    input: &Path,
    levels: u32,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> CliResult<i32> {
    let w = read_mac(input)?;
    let profile = polar_profile(&w, levels, mu)?;
    let rows: Vec<PolarRow> = (0..profile.len())
        .map(|i| PolarRow {
            index: i,
            lower_nats: profile.lower[i],
            upper_nats: profile.upper[i],
            gap: profile.upper[i] - profile.lower[i],
        })
        .collect();
    if let Some(p) = path {
        let mut buf = Vec::new();
        csv_rows(&rows, &mut buf)?;
        write_file(p, &String::from_utf8_lossy(&buf))?;
    }
    match format {
        Format::Text => {
            let widest = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
            writeln!(
                out,
                "{} synthetic channels, largest alphabet {}, widest interval {widest:.3e}",
                rows.len(),
                profile.max_alphabet
            )?;
            if path.is_none() {
                for r in &rows {
                    writeln!(
                        out,
                        "{:>6} {:.9} {:.9} {:.3e}",
                        r.index, r.lower_nats, r.upper_nats, r.gap
                    )?;
                }
            }
        }
        Format::Csv => csv_rows(&rows, out)?,
        Format::Json => json_line(&profile, out)?,
    }
    Ok(EXIT_OK)
}
