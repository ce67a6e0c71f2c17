use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use caption_core::counts::IndexKind;
use caption_core::model;
use caption_core::retrieval::CaptionIndex;
use caption_core::trainer;
use caption_cli::app::{self, ProposalView, Workspace};
use caption_cli::service;

#[derive(Parser)]
#[command(name = "caption-ir", version, about = "Parse, index and search picture captions")]
struct Cli {
    /// Data directory.
    #[arg(long, env = "CAPTION_IR_DATA", default_value = "data", global = true)]
    data: PathBuf,
    /// Config file used instead of `<data>/config.txt`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate lexicon, grammar, counts and config.
    Build,
    /// Print the best parses of a caption.
    Parse {
        #[arg(value_parser = non_empty)]
        text: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        /// Indented trees.
        #[arg(long, conflicts_with = "meaning")]
        trees: bool,
        /// Meaning lists.
        #[arg(long)]
        meaning: bool,
    },
    /// Parse a corpus and save its index.
    Index {
        /// Defaults to `<data>/corpus.txt`.
        corpus: Option<PathBuf>,
    },
    /// Search the index.
    Query {
        #[arg(value_parser = non_empty)]
        text: String,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
    },
    /// Train counts from gold trees or by reviewing proposals.
    Train {
        #[arg(long, conflicts_with = "interactive", required_unless_present = "interactive")]
        gold: Option<PathBuf>,
        #[arg(long)]
        interactive: bool,
    },
    Counts {
        #[command(subcommand)]
        action: CountsAction,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Subcommand)]
enum CountsAction {
    /// Drop pairs whose counts are predictable from their ancestors.
    Compact,
    Stats,
    /// Estimated count and co-occurrence log probability of one pair.
    Estimate {
        /// Statistic key: a binary rule id, with `/<class>` for preposition attachment.
        key: String,
        head: String,
        dep: String,
    },
}

fn non_empty(s: &str) -> Result<String, String> {
    if s.trim().is_empty() {
        Err("text must not be empty".into())
    } else {
        Ok(s.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ws = Workspace::new(&cli.data, cli.config.clone());
    match run(&ws, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(ws: &Workspace, command: Command) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match command {
        Command::Build => {
            let model = ws.load_model()?;
            writeln!(out, "senses {}", model.lexicon.synsets().count())?;
            writeln!(out, "formats {}", model.lexicon.formats().len())?;
            writeln!(out, "rules {}", model.grammar.rules().len())?;
            writeln!(out, "start {}", model.grammar.start())?;
            writeln!(out, "pairs {}", model.counts.len())?;
        }
        Command::Parse { text, n, trees, meaning } => {
            let model = ws.load_model()?;
            let report = app::parse_report(&model, &text, n as usize)?;
            for u in &report.unknown {
                let ranked: Vec<String> = u
                    .classification
                    .ranked
                    .iter()
                    .map(|(s, score)| format!("{s}={score:.4}"))
                    .collect();
                writeln!(out, "# unknown {} {}", u.token, ranked.join(" "))?;
            }
            for p in &report.parses {
                if meaning {
                    writeln!(out, "# {} {}", p.rank, p.score)?;
                    write!(out, "{}", p.meaning_text)?;
                } else if trees {
                    writeln!(out, "# {} {}", p.rank, p.score)?;
                    write!(out, "{}", app::render_tree(&p.tree))?;
                } else {
                    writeln!(out, "{}\t{}\t{}", p.rank, p.score, p.bracketed)?;
                }
            }
        }
        Command::Index { corpus } => {
            let model = ws.load_model()?;
            let path = corpus.unwrap_or_else(|| ws.dir.corpus());
            let text = model::read(&path)?;
            let mut index = CaptionIndex::new();
            let failed = index
                .index_corpus(&model, &text)
                .with_context(|| format!("indexing {}", path.display()))?;
            for r in index.records() {
                if let Some(e) = &r.error {
                    writeln!(out, "# {}: {e}", r.id)?;
                }
            }
            index.save(&ws.dir.index_dir())?;
            writeln!(out, "indexed {} captions, {failed} without a parse", index.len())?;
        }
        Command::Query { text, k } => {
            let model = ws.load_model()?;
            let index = ws.load_index(&model)?;
            for h in app::query_report(&model, &index, &text, k as usize)? {
                writeln!(out, "{}\t{}\t{}\t{}", h.caption_id, h.matched_predicates, h.best_score, h.text)?;
            }
        }
        Command::Train { gold: Some(path), .. } => {
            let mut model = ws.load_model()?;
            let gold = model::read(&path)?;
            let n = trainer::batch_train(&mut model, &gold).with_context(|| format!("training from {}", path.display()))?;
            model.save_counts(&ws.dir)?;
            writeln!(out, "trained on {n} trees")?;
        }
        Command::Train { .. } => interactive(ws, &mut out)?,
        Command::Counts { action } => {
            let mut model = ws.load_model()?;
            match action {
                CountsAction::Compact => {
                    let dropped = model.counts.compact(&model.lexicon, &model.config);
                    model.save_counts(&ws.dir)?;
                    writeln!(out, "dropped {dropped} pairs, {} remain", model.counts.len())?;
                }
                CountsAction::Stats => {
                    let s = app::store_stats(&model);
                    writeln!(out, "pairs {}", s.pairs)?;
                    writeln!(out, "unary {}", s.unary_entries)?;
                    writeln!(out, "total_instances {}", s.total_instances)?;
                    writeln!(out, "grammar_rules {}", s.grammar_rules)?;
                    for kind in IndexKind::ALL {
                        writeln!(out, "index {kind:?} {}", model.counts.index_keys(kind).len())?;
                    }
                }
                CountsAction::Estimate { key, head, dep } => {
                    if !model.is_stat_key(&key) {
                        anyhow::bail!("`{key}` is not a binary rule id or preposition-specialised key");
                    }
                    let (head, dep) = (head.as_str().into(), dep.as_str().into());
                    let (lex, cfg) = (&model.lexicon, &model.config);
                    let est = model.counts.estimated_pair_count(lex, cfg, &key, &head, &dep)?;
                    let lp = model.counts.cooc_log_prob(lex, cfg, &key, &head, &dep)?;
                    writeln!(out, "estimate {}", est.value)?;
                    writeln!(out, "source {}", serde_json::to_string(&est.source)?)?;
                    writeln!(out, "unary {}", model.counts.unary(&head))?;
                    writeln!(out, "log_prob {lp}")?;
                }
            }
        }
        Command::Serve { port, host } => {
            drop(out);
            let state = service::AppState::open(ws.clone())?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, service::router(state)).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}

/// Reads `a`, `r`, `s` or `q` lines from stdin for each proposal.
fn interactive(ws: &Workspace, out: &mut impl Write) -> anyhow::Result<()> {
    let lock = ws.lock()?;
    let (mut model, mut session) = ws.open_session(&lock)?;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    while let Some(p) = session.propose(&model)? {
        let view = ProposalView::from(p);
        writeln!(out, "caption {} rank {} score {}", view.caption_id, view.rank, view.score)?;
        writeln!(out, "{}", view.text)?;
        write!(out, "{}", app::render_tree(&view.tree))?;
        write!(out, "{}", view.meaning_text)?;
        write!(out, "[a]ccept [r]eject [s]kip [q]uit> ")?;
        out.flush()?;
        let Some(line) = lines.next().transpose()? else { break };
        match line.trim() {
            "a" => {
                session.accept(&mut model)?;
            }
            "r" => {
                session.reject()?;
            }
            "s" => {
                session.skip()?;
            }
            "q" => break,
            other => {
                writeln!(out, "unknown command `{other}`")?;
                continue;
            }
        }
        ws.save_session(&model, &session)?;
    }
    ws.save_session(&model, &session)?;
    let c = session.counters();
    writeln!(
        out,
        "reviewed {} accepted {} first-try {} skipped {}",
        c.total_reviewed, c.accepted, c.first_try_accepted, c.skipped
    )?;
    Ok(())
}
