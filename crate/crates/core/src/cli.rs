//! The `adprov` command line.
//!
//! A store is a directory of `<provider>.jsonl` files, each an append-only
//! file provider; `default.jsonl` is the one written to. Commands that write
//! hold an exclusive lock on `<store>/.lock`.
//!
//! Exit codes: 0 success, 2 validation, 3 not found, 4 integrity, 1 other.

use std::fs::{self, File};
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::holder::{FileProvider, HolderError, IntegrityVerdict, ProvenanceHolder};
use crate::model::parse_model;
use crate::service::{export_instance, ingest_xes, instance_changes, ApiError, ExportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

pub const DEFAULT_STORE: &str = "./adprov-store";
pub const DEFAULT_PROVIDER: &str = "default";
const LOCK_FILE: &str = ".lock";

#[derive(Debug, Parser)]
#[command(name = "adprov", version, about = "Provenance of runtime process adaptations")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, default_value = DEFAULT_STORE)]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    #[value(name = "prov-n")]
    ProvN,
    #[value(name = "prov-json")]
    ProvJson,
    Dot,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::ProvN => ExportFormat::ProvN,
            Format::ProvJson => ExportFormat::ProvJson,
            Format::Dot => ExportFormat::Dot,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Collect an XES log into the store.
    Ingest {
        log: PathBuf,
        /// Process model used to derive changes.
        #[arg(long, requires = "detect")]
        model: Option<PathBuf>,
        /// Derive change events by aligning traces with the model.
        #[arg(long, requires = "model")]
        detect: bool,
    },
    /// Export the provenance of one instance.
    Export {
        instance: String,
        #[arg(long, value_enum, default_value = "prov-n")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the change events of one instance.
    Changes { instance: String },
    /// Check the hash chain of every provider.
    Validate,
    /// Copy every record of one provider into a new, empty one.
    Migrate { from: String, to: String },
    /// Serve the HTTP API over the store.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn other(message: impl ToString) -> Self {
        Failure {
            code: EXIT_OTHER,
            message: message.to_string(),
        }
    }
}

impl From<ApiError> for Failure {
    fn from(err: ApiError) -> Self {
        let code = match (err.status, err.code.as_str()) {
            (_, "store_tampered") => EXIT_INTEGRITY,
            (404, _) => EXIT_NOT_FOUND,
            (400 | 422, _) => EXIT_VALIDATION,
            _ => EXIT_OTHER,
        };
        let mut message = err.detail;
        for v in err.violations.iter().flatten() {
            message.push_str(&format!("\n  {v}"));
        }
        Failure { code, message }
    }
}

impl From<HolderError> for Failure {
    fn from(err: HolderError) -> Self {
        ApiError::from(err).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::other(err)
    }
}

fn valid_provider_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Opens every provider of the store; creates the store and its default
/// provider when missing.
pub fn open_store(dir: &Path) -> Result<ProvenanceHolder, HolderError> {
    fs::create_dir_all(dir).map_err(|e| HolderError::Provider(e.into()))?;
    let default = FileProvider::open(DEFAULT_PROVIDER, dir.join(format!("{DEFAULT_PROVIDER}.jsonl")))?;
    let mut holder = ProvenanceHolder::new(Box::new(default));
    let mut others: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| HolderError::Provider(e.into()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .filter(|(id, _)| id != DEFAULT_PROVIDER && valid_provider_id(id))
        .collect();
    others.sort();
    for (id, path) in others {
        holder.add_provider(Box::new(FileProvider::open(&id, path)?))?;
    }
    Ok(holder)
}

fn lock_store(dir: &Path) -> Result<File, Failure> {
    fs::create_dir_all(dir)?;
    let file = File::create(dir.join(LOCK_FILE))?;
    file.try_lock()
        .map_err(|_| Failure::other(format!("store {} is locked by another process", dir.display())))?;
    Ok(file)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: if e.kind() == std::io::ErrorKind::NotFound {
            EXIT_NOT_FOUND
        } else {
            EXIT_OTHER
        },
        message: format!("{}: {e}", path.display()),
    })
}

fn plural(n: usize, word: &str) -> String {
    format!("{n} {word}{}", if n == 1 { "" } else { "s" })
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let store = cli.store;
    match cli.command {
        Command::Ingest { log, model, .. } => {
            let xes = read(&log)?;
            let model = match model {
                Some(path) => Some(parse_model(&read(&path)?).map_err(|e| Failure {
                    code: EXIT_VALIDATION,
                    message: format!("{}: {e}", path.display()),
                })?),
                None => None,
            };
            let _lock = lock_store(&store)?;
            let holder = open_store(&store)?;
            let report = ingest_xes(&holder, DEFAULT_PROVIDER, &xes, model.as_ref())?;
            for id in &report.record_ids {
                writeln!(out, "{id}")?;
            }
            let mut summary = plural(report.record_ids.len(), "record");
            if report.change_count > 0 {
                summary.push_str(&format!(", {}", plural(report.change_count, "change")));
            }
            writeln!(out, "{summary}")?;
        }
        Command::Export { instance, format, out: target } => {
            let holder = open_store(&store)?;
            let text = export_instance(&holder, &instance, None, format.into())?;
            match target {
                Some(path) => fs::write(&path, text)?,
                None => out.write_all(text.as_bytes())?,
            }
        }
        Command::Changes { instance } => {
            let holder = open_store(&store)?;
            for change in instance_changes(&holder, &instance, None)? {
                writeln!(out, "{}", change.summary())?;
            }
        }
        Command::Validate => {
            let holder = open_store(&store)?;
            let providers = holder.providers();
            let mut code = EXIT_OK;
            for descriptor in &providers {
                let verdict = holder.validate_chain(&descriptor.provider_id)?;
                if let IntegrityVerdict::Tampered { .. } = verdict {
                    code = EXIT_INTEGRITY;
                }
                if providers.len() == 1 {
                    writeln!(out, "{verdict}")?;
                } else {
                    writeln!(out, "{}: {verdict}", descriptor.provider_id)?;
                }
            }
            return Ok(code);
        }
        Command::Migrate { from, to } => {
            if !valid_provider_id(&to) {
                return Err(Failure {
                    code: EXIT_VALIDATION,
                    message: format!("invalid provider id `{to}`"),
                });
            }
            let _lock = lock_store(&store)?;
            let mut holder = open_store(&store)?;
            let created = !holder.providers().iter().any(|d| d.provider_id == to);
            let path = store.join(format!("{to}.jsonl"));
            if created {
                holder.add_provider(Box::new(FileProvider::open(&to, &path).map_err(HolderError::from)?))?;
            }
            let count = holder.migrate(&from, &to).inspect_err(|_| {
                if created {
                    let _ = fs::remove_file(&path);
                }
            })?;
            writeln!(out, "migrated {} from {from} to {to}", plural(count, "record"))?;
        }
        Command::Serve { port, host } => {
            let _lock = lock_store(&store)?;
            let holder = open_store(&store)?;
            let addr = SocketAddr::new(host, port);
            let runtime = tokio::runtime::Runtime::new()?;
            writeln!(out, "listening on http://{addr}")?;
            out.flush()?;
            runtime.block_on(crate::service::serve(holder, addr, async {
                let _ = tokio::signal::ctrl_c().await;
            }))?;
        }
    }
    Ok(EXIT_OK)
}

/// Runs the command line; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return e.exit_code();
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "adprov: {}", failure.message);
            failure.code
        }
    }
}
