//! The `rxtropic` command line.
//!
//! Exit status is 0 on success, 1 when an operation fails (weak password,
//! bad fixture, store already in use, ...) and 2 for usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rxtropic_core::auth::{HashCost, PasswordHasher};
use rxtropic_core::clock::SystemClock;
use rxtropic_core::rules::DEFAULT_DUPLICATE_WINDOW_DAYS;
use rxtropic_core::store::Store;
use rxtropic_core::{fixture, tooling, Service, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "rxtropic", version, about = "Electronic prescribing service")]
pub struct Cli {
    /// Path of the store file. Created if missing.
    #[arg(long, global = true, env = "RXTROPIC_STORE", default_value = "rxtropic.redb")]
    pub store: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Create the first administrator account.
    BootstrapAdmin {
        #[arg(long)]
        license: String,
        #[arg(long, env = "RXTROPIC_ADMIN_PASSWORD", hide_env_values = true)]
        password: String,
        #[arg(long, default_value = "Administrator")]
        name: String,
    },
    /// Load diseases, drugs, interaction rules and demo patients.
    Seed {
        /// Fixture file. Defaults to the bundled demo data.
        fixture: Option<PathBuf>,
    },
    /// Write the audit log as JSON lines.
    ExportAudit {
        /// Defaults to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write the reference data in fixture format.
    ExportFixture {
        /// Defaults to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    #[arg(long, env = "RXTROPIC_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long, env = "RXTROPIC_SESSION_TTL_SECS", default_value_t = 8 * 3600)]
    pub session_ttl_secs: i64,
    #[arg(long, env = "RXTROPIC_DUPLICATE_WINDOW_DAYS", default_value_t = DEFAULT_DUPLICATE_WINDOW_DAYS)]
    pub duplicate_window_days: u32,
    /// Directory of static files served under `/`.
    #[arg(long, env = "RXTROPIC_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Core(rxtropic_core::Error),
    Io(String, io::Error),
}

impl From<rxtropic_core::Error> for Failure {
    fn from(e: rxtropic_core::Error) -> Self {
        Failure::Core(e)
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {}: {e}", e.code());
            ExitCode::from(1)
        }
        Err(Failure::Io(what, e)) => {
            eprintln!("error: {what}: {e}");
            ExitCode::from(1)
        }
    }
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Io(format!("cannot create {}", p.display()), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    if let Command::Serve(args) = cli.command {
        return serve(cli.store, args);
    }
    let store = Store::open(&cli.store)?;
    match cli.command {
        Command::Serve(_) => unreachable!(),
        Command::BootstrapAdmin { license, password, name } => {
            let hasher = PasswordHasher::new(HashCost::Standard);
            let id = tooling::bootstrap_admin(&store, &SystemClock, &hasher, &name, &license, &password)?;
            println!("{id}");
        }
        Command::Seed { fixture: path } => {
            let fx = match path {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Failure::Io(format!("cannot read {}", p.display()), e))?;
                    fixture::parse(&text)?
                }
                None => fixture::default_fixture(),
            };
            print!("{}", tooling::seed(&store, &SystemClock, &fx)?);
        }
        Command::ExportAudit { output } => {
            let mut out = open_output(output.as_ref())?;
            tooling::export_audit(&store, &mut out)?;
            out.flush().map_err(|e| Failure::Io("write".into(), e))?;
        }
        Command::ExportFixture { output } => {
            let text = fixture::format(&tooling::export_fixture(&store)?);
            let mut out = open_output(output.as_ref())?;
            out.write_all(text.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| Failure::Io("write".into(), e))?;
        }
    }
    Ok(())
}

fn serve(store_path: PathBuf, args: ServeArgs) -> Result<(), Failure> {
    let _ = tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .try_init();
    let store = Store::open(&store_path)?;
    let svc = Service::new(
        store,
        ServiceConfig {
            session_ttl: chrono::Duration::seconds(args.session_ttl_secs.max(1)),
            duplicate_window_days: args.duplicate_window_days,
            ..ServiceConfig::default()
        },
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io("runtime".into(), e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .map_err(|e| Failure::Io(format!("cannot bind {}", args.bind), e))?;
        let addr = listener.local_addr().map_err(|e| Failure::Io("local address".into(), e))?;
        println!("listening on {addr}");
        let _ = io::stdout().flush();
        tracing::info!(%addr, store = %store_path.display(), "serving");
        axum::serve(listener, crate::router(svc, args.ui_dir))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(|e| Failure::Io("server".into(), e))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}
