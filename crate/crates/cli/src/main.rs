//! `ctxsearch` command-line tool.

use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ctxsearch_core::config::{load_engine, ResourcePaths};
use ctxsearch_core::eval::simulate::{read_rows, run_phase_simulation, write_rows, NoPause};
use ctxsearch_core::eval::{aggregate_report, render_table, SimulationSetup};
use ctxsearch_core::lexicon::load_stopwords;
use ctxsearch_core::profile::{parse_records, query_entries, ProfileEntry, ProfileStore};
use ctxsearch_core::search::{index_corpus, load_corpus};
use ctxsearch_core::session::{Phase, ServiceConfig, SessionService, SystemClock};
use ctxsearch_http::HttpSessionClient;

#[derive(Parser)]
#[command(name = "ctxsearch", version, about = "Contextual search with personal and shared profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Index a directory of HTML files into an index file.
    Index {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stopwords: PathBuf,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Index file or HTML directory.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        ontology: PathBuf,
        #[arg(long)]
        stopwords: PathBuf,
        #[arg(long, value_enum, default_value = "on")]
        sckb: Toggle,
        /// Profile store directory.
        #[arg(long, default_value = "ctxsearch-store")]
        store: PathBuf,
        #[arg(long, default_value_t = 10)]
        page_size: usize,
    },
    /// Run simulated subjects for one phase and write rows as JSON lines.
    Simulate {
        #[arg(long)]
        phase: Phase,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Run against a running server instead of in-process.
        #[arg(long)]
        server: Option<String>,
    },
    /// Aggregate row files from the three phases into a report.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        rows: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export or import a user's profile log.
    Profile {
        #[command(subcommand)]
        action: ProfileAction,
    },
}

#[derive(Subcommand)]
enum ProfileAction {
    /// Write the user's entries as JSON lines, oldest first.
    Export {
        #[arg(long)]
        user: String,
        #[arg(long, default_value = "ctxsearch-store")]
        store: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Append entries from a JSON lines file to the user's profile.
    Import {
        #[arg(long)]
        user: String,
        #[arg(long, default_value = "ctxsearch-store")]
        store: PathBuf,
        #[arg(long)]
        from: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Index { dir, out, stopwords } => {
            let stop = load_stopwords(&stopwords)?;
            let docs = load_corpus(&dir, &stop)?;
            let index = index_corpus(&docs, &stop)?;
            index.save(&out)?;
            println!("indexed {} documents, {} terms -> {}", index.doc_count, index.postings.len(), out.display());
        }
        Command::Serve {
            port,
            host,
            corpus,
            lexicon,
            ontology,
            stopwords,
            sckb,
            store,
            page_size,
        } => {
            let paths = ResourcePaths { corpus, lexicon, ontology, stopwords };
            let engine = Arc::new(load_engine(&paths, page_size)?);
            let config = ServiceConfig {
                page_size,
                sckb_enabled: matches!(sckb, Toggle::On),
                ..ServiceConfig::default()
            };
            let store = Arc::new(ProfileStore::open(&store)?);
            let service = Arc::new(SessionService::new(engine, store, Arc::new(SystemClock), config));
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host or port")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                ctxsearch_http::serve(listener, service).await
            })?;
        }
        Command::Simulate { phase, config, seed, out, server } => {
            let setup = SimulationSetup::load(&config)?;
            let rows = match server {
                Some(url) => {
                    let client = HttpSessionClient::new(url)?;
                    run_phase_simulation(&client, &setup.phase_config(phase), seed, &NoPause)?
                }
                None => {
                    let work = tempfile::tempdir()?;
                    setup.run_phase(phase, seed, &work.path().join("store"))?
                }
            };
            fs::write(&out, write_rows(&rows)?)?;
            let found = rows.iter().filter(|r| r.found).count();
            println!("{phase}: {} rows ({found} found) -> {}", rows.len(), out.display());
        }
        Command::Eval { rows, out } => {
            let mut all = Vec::new();
            for path in &rows {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                all.extend(read_rows(&text).with_context(|| format!("parsing {}", path.display()))?);
            }
            let report = aggregate_report(all)?;
            fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            print!("{}", render_table(&report));
        }
        Command::Profile { action } => match action {
            ProfileAction::Export { user, store, out } => {
                let store = ProfileStore::open(&store)?;
                if !store.user_exists(&user) {
                    bail!("no profile for user {user:?}");
                }
                let profile = store.profile(&user)?;
                let mut entries = query_entries(&*profile, usize::MAX);
                entries.reverse();
                let mut text = String::new();
                for e in &entries {
                    text.push_str(&serde_json::to_string(e)?);
                    text.push('\n');
                }
                match out {
                    Some(path) => {
                        fs::write(&path, text)?;
                        eprintln!("exported {} entries -> {}", entries.len(), path.display());
                    }
                    None => print!("{text}"),
                }
            }
            ProfileAction::Import { user, store, from } => {
                let store = ProfileStore::open(&store)?;
                let text = fs::read_to_string(&from).with_context(|| format!("reading {}", from.display()))?;
                let entries: Vec<ProfileEntry> = parse_records(&text)?;
                let n = store.import_entries(&user, entries)?;
                println!("imported {n} entries for {user}");
            }
        },
    }
    Ok(())
}
