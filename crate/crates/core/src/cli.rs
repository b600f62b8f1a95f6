//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Location, Result};
use crate::ext::{IoSnapshot, Phase, DEFAULT_BUFFER_SIZE};
use crate::model::{validate_located, Alphabet, StringCollection};
use crate::oracle::{oracle_all, ORACLE_LIMIT};
use crate::pipeline::{build, BuildOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "extbwt", version, about = "Disk-backed BWT and LCP construction for sets of equal-length strings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the BWT and LCP array of the strings in a file.
    Build(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One string per line.
    Plain,
    /// FASTA records, sequence lines concatenated.
    Fasta,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Plain)]
    pub format: InputFormat,
    /// Letters in increasing order; the sentinel `$` is implicit.
    #[arg(long, default_value = "ACGT")]
    pub alphabet: String,
    #[arg(long)]
    pub workdir: PathBuf,
    /// Defaults to `<workdir>/bwt.txt` (`bwt.bin` with --binary).
    #[arg(long)]
    pub out_bwt: Option<PathBuf>,
    /// Defaults to `<workdir>/lcp.txt` (`lcp.bin` with --binary).
    #[arg(long)]
    pub out_lcp: Option<PathBuf>,
    /// key=value stats; a JSON copy is written next to it. Defaults to `<workdir>/stats.txt`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Compare the result with the brute-force oracle.
    #[arg(long)]
    pub verify: bool,
    /// Keep every per-iteration array in the workdir.
    #[arg(long)]
    pub keep_intermediates: bool,
    /// Raw symbol codes for the BWT and 4-byte little-endian LCP values.
    #[arg(long)]
    pub binary: bool,
    #[arg(long, default_value_t = DEFAULT_BUFFER_SIZE)]
    pub buffer_size: usize,
    /// Run even if the workdir is not empty.
    #[arg(long)]
    pub force: bool,
}

impl RunConfig {
    pub fn bwt_path(&self) -> PathBuf {
        self.out_bwt.clone().unwrap_or_else(|| {
            self.workdir
                .join(if self.binary { "bwt.bin" } else { "bwt.txt" })
        })
    }

    pub fn lcp_path(&self) -> PathBuf {
        self.out_lcp.clone().unwrap_or_else(|| {
            self.workdir
                .join(if self.binary { "lcp.bin" } else { "lcp.txt" })
        })
    }

    pub fn stats_path(&self) -> PathBuf {
        self.stats
            .clone()
            .unwrap_or_else(|| self.workdir.join("stats.txt"))
    }

    pub fn stats_json_path(&self) -> PathBuf {
        let path = self.stats_path();
        let json = path.with_extension("json");
        if json == path {
            let mut s = path.into_os_string();
            s.push(".json");
            PathBuf::from(s)
        } else {
            json
        }
    }
}

/// Reads and validates the input strings.
pub fn parse_input(path: &Path, format: InputFormat, alphabet: &Alphabet) -> Result<StringCollection> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        InputFormat::Plain => {
            let mut lines: Vec<&str> = text
                .lines()
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .collect();
            while lines.last().is_some_and(|l| l.is_empty()) {
                lines.pop();
            }
            validate_located(
                lines
                    .into_iter()
                    .enumerate()
                    .map(|(i, l)| (Location::Line(i + 1), l)),
                alphabet,
            )
        }
        InputFormat::Fasta => {
            let mut records: Vec<String> = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.starts_with('>') {
                    records.push(String::new());
                } else if line.is_empty() {
                    continue;
                } else if let Some(seq) = records.last_mut() {
                    seq.push_str(line);
                } else {
                    return Err(Error::MalformedInput(format!(
                        "line {}: sequence data before the first FASTA header",
                        i + 1
                    )));
                }
            }
            validate_located(
                records
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (Location::Record(i + 1), r.as_str())),
                alphabet,
            )
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub m: usize,
    pub k: usize,
    pub sigma: usize,
    pub positions: u64,
    pub iterations: usize,
    pub io: IoSnapshot,
    pub wall_time_secs: f64,
    /// `"passed"`, `"failed"`, `"skipped"` (too large) or `"off"`.
    pub verify: &'static str,
}

impl RunStats {
    pub fn to_key_value(&self) -> String {
        let mut out = format!(
            "m={}\nk={}\nsigma={}\npositions={}\niterations={}\n",
            self.m, self.k, self.sigma, self.positions, self.iterations
        );
        for phase in Phase::ALL {
            let io = self.io.get(phase);
            let name = phase.name();
            out.push_str(&format!(
                "{name}_bytes_read={}\n{name}_bytes_written={}\n{name}_files_opened={}\n",
                io.bytes_read, io.bytes_written, io.files_opened
            ));
        }
        out.push_str(&format!(
            "wall_time_secs={:.6}\nverify={}\n",
            self.wall_time_secs, self.verify
        ));
        out
    }
}

fn check_workdir(cfg: &RunConfig) -> Result<()> {
    match fs::read_dir(&cfg.workdir) {
        Ok(mut entries) => {
            if entries.next().is_some() && !cfg.force {
                Err(Error::WorkdirNotEmpty(cfg.workdir.clone()))
            } else {
                Ok(())
            }
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(&cfg.workdir, e)),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn first_difference<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .or((a.len() != b.len()).then(|| a.len().min(b.len())))
}

/// Runs the whole build described by `cfg` and writes outputs and stats.
pub fn run_build(cfg: &RunConfig) -> Result<RunStats> {
    let started = Instant::now();
    let alphabet = Alphabet::new(&cfg.alphabet)?;
    check_workdir(cfg)?;
    let coll = parse_input(&cfg.input, cfg.format, &alphabet)?;
    let opts = BuildOptions {
        buffer_size: cfg.buffer_size,
        rolling: !cfg.keep_intermediates,
        verify_permutations: cfg.verify,
        ..BuildOptions::default()
    };
    let (store, out) = build(&coll, &cfg.workdir, &opts)?;
    let emit = store.with_phase(Phase::Emit);

    let bwt_path = cfg.bwt_path();
    let lcp_path = cfg.lcp_path();
    let mut bwt_out = create(&bwt_path)?;
    let mut lcp_out = create(&lcp_path)?;
    if cfg.binary {
        out.write_bwt_binary(&emit, &mut bwt_out)?;
        out.write_lcp_binary(&emit, &mut lcp_out)?;
    } else {
        out.write_bwt_text(&emit, &alphabet, &mut bwt_out)?;
        out.write_lcp_text(&emit, &mut lcp_out)?;
    }
    bwt_out.flush().map_err(|e| Error::io(&bwt_path, e))?;
    lcp_out.flush().map_err(|e| Error::io(&lcp_path, e))?;

    let mut mismatch = None;
    let verify = if !cfg.verify {
        "off"
    } else if coll.positions() > ORACLE_LIMIT {
        log::warn!(
            "skipping verification: {} positions exceed the oracle limit {ORACLE_LIMIT}",
            coll.positions()
        );
        "skipped"
    } else {
        let oracle = oracle_all(&coll)?;
        if let Some(i) = first_difference(&out.bwt_codes(&emit)?, &oracle.bwt) {
            mismatch = Some(("BWT", i + 1));
        } else if let Some(i) = first_difference(&out.lcp_values(&emit)?, &oracle.lcp) {
            mismatch = Some(("LCP", i + 1));
        }
        if mismatch.is_some() {
            "failed"
        } else {
            "passed"
        }
    };

    let stats = RunStats {
        m: coll.m(),
        k: coll.k(),
        sigma: coll.sigma(),
        positions: out.len(),
        iterations: out.iterations,
        io: store.stats().snapshot(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        verify,
    };
    let stats_path = cfg.stats_path();
    let mut w = create(&stats_path)?;
    w.write_all(stats.to_key_value().as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&stats_path, e))?;
    let json_path = cfg.stats_json_path();
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &stats)
        .map_err(std::io::Error::from)
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&json_path, e))?;

    match mismatch {
        Some((what, index)) => Err(Error::VerifyMismatch { what, index }),
        None => Ok(stats),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::VerifyMismatch { .. } => EXIT_VERIFY,
        e if e.is_validation() => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Build(cfg) => match run_build(&cfg) {
            Ok(stats) => {
                log::info!(
                    "built BWT of {} positions in {} merge iterations",
                    stats.positions,
                    stats.iterations
                );
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code(&e)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn plain_and_fasta_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let dna = Alphabet::dna();
        let c = parse_input(&write(dir.path(), "a.txt", "AC\nCA\n"), InputFormat::Plain, &dna).unwrap();
        assert_eq!((c.m(), c.k()), (2, 2));
        let c = parse_input(
            &write(dir.path(), "b.fa", ">r1\nAC\n>r2\nCA\n"),
            InputFormat::Fasta,
            &dna,
        )
        .unwrap();
        assert_eq!((c.m(), c.k()), (2, 2));
        let c = parse_input(
            &write(dir.path(), "c.fa", ">r1 desc\nAC\nGT\n\n>r2\nCAGG\n"),
            InputFormat::Fasta,
            &dna,
        )
        .unwrap();
        assert_eq!((c.m(), c.k()), (2, 4));
        let c = parse_input(&write(dir.path(), "d.txt", "ac\r\nca\r\n\n"), InputFormat::Plain, &dna).unwrap();
        assert_eq!(c.string(1), &[1, 2]);
    }

    #[test]
    fn input_errors_carry_locations() {
        let dir = tempfile::tempdir().unwrap();
        let dna = Alphabet::dna();
        let err = parse_input(&write(dir.path(), "a.txt", "AC\nC\n"), InputFormat::Plain, &dna).unwrap_err();
        assert!(matches!(
            err,
            Error::UnequalLength {
                at: Location::Line(2),
                ..
            }
        ));
        assert!(err.to_string().contains("line 2"));
        let err = parse_input(
            &write(dir.path(), "b.fa", ">r1\nAC\n>r2\nCAT\n"),
            InputFormat::Fasta,
            &dna,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::UnequalLength {
                at: Location::Record(2),
                ..
            }
        ));
        assert!(matches!(
            parse_input(&write(dir.path(), "c.fa", "AC\n>r1\nAC\n"), InputFormat::Fasta, &dna),
            Err(Error::MalformedInput(_))
        ));
        assert!(matches!(
            parse_input(&write(dir.path(), "d.txt", "\n\n"), InputFormat::Plain, &dna),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn stats_json_path_differs_from_stats_path() {
        let mut cfg = RunConfig {
            input: "in".into(),
            format: InputFormat::Plain,
            alphabet: "ACGT".into(),
            workdir: "w".into(),
            out_bwt: None,
            out_lcp: None,
            stats: None,
            verify: false,
            keep_intermediates: false,
            binary: false,
            buffer_size: 16,
            force: false,
        };
        assert_eq!(cfg.stats_json_path(), PathBuf::from("w/stats.json"));
        cfg.stats = Some("s.json".into());
        assert_eq!(cfg.stats_json_path(), PathBuf::from("s.json.json"));
    }

    #[test]
    fn first_difference_positions() {
        assert_eq!(first_difference(&[1, 2, 3], &[1, 2, 3]), None);
        assert_eq!(first_difference(&[1, 2, 3], &[1, 5, 3]), Some(1));
        assert_eq!(first_difference(&[1, 2], &[1, 2, 3]), Some(2));
    }
}
