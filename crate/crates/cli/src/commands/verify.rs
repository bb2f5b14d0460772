//! `hetrel verify`: randomized equivalence checks of the model's three
//! structural guarantees against brute-force oracles.
//!
//! 1. With identity weights, the relevance of two nodes equals the
//!    probability that two equal-length uniform random walks meet.
//! 2. Splitting every edge with an intermediate node and doubling the
//!    walk length changes no relevance between original nodes.
//! 3. The stacked-identity message weight is injective on one-hot inputs:
//!    every unordered node pair yields a distinct message.

use std::path::PathBuf;

use clap::Args;
use hetrel::cpgnn::{apply_message_weight, sum_extractor};
use hetrel::hetgraph::{augment_with_intermediates, write_edges_tsv, write_nodes_tsv, HeteroGraph, LabelTable, NodeId};
use hetrel::measures::{gnn_identity_relevance, prw_brute};
use hetrel::synthetic::random_graph;

use crate::error::CliError;

/// Deviations above this fail theorems 1 and 2.
const TOLERANCE: f64 = 1e-10;
/// Brute-force enumeration cap for theorems 1 and 2.
const MAX_BRUTE_NODES: usize = 12;
/// One-hot injectivity cap for theorem 3.
const MAX_ONEHOT_NODES: usize = 50;
/// Walk depths checked per graph.
const DEPTHS: [usize; 3] = [1, 2, 3];

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Which guarantee to check.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub theorem: u8,
    /// How many random graphs to try (theorems 1 and 2).
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Node-count cap: at most 12 for theorems 1–2, 50 for theorem 3.
    #[arg(long)]
    pub max_nodes: Option<usize>,
    /// Seed for the random graphs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where a failing graph gets dumped.
    #[arg(long, default_value = ".")]
    pub dump_dir: PathBuf,
}

pub fn run(args: VerifyArgs) -> Result<i32, CliError> {
    match args.theorem {
        1 | 2 => run_walk_equivalence(&args),
        3 => run_injectivity(&args),
        _ => unreachable!("clap restricts --theorem to 1..=3"),
    }
}

/// Theorems 1 and 2 share the trial loop; only the oracle pair differs.
fn run_walk_equivalence(args: &VerifyArgs) -> Result<i32, CliError> {
    let max_nodes = args.max_nodes.unwrap_or(MAX_BRUTE_NODES);
    if max_nodes > MAX_BRUTE_NODES {
        return Err(CliError::usage(format!(
            "--max-nodes is capped at {MAX_BRUTE_NODES} for theorem {} (brute-force oracle)",
            args.theorem
        )));
    }
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be at least 1"));
    }

    let mut max_dev = 0.0_f64;
    let mut failing: Option<(HeteroGraph, NodeId, NodeId, usize)> = None;
    for trial in 0..args.trials {
        let g = random_graph(args.seed.wrapping_add(trial as u64), max_nodes);
        let augmented = (args.theorem == 2).then(|| augment_with_intermediates(&g));
        for &k in &DEPTHS {
            for i in g.nodes() {
                for j in g.nodes() {
                    if j.0 < i.0 {
                        continue;
                    }
                    let ours = gnn_identity_relevance(&g, i, j, k)?;
                    let oracle = match &augmented {
                        None => prw_brute(&g, i, j, 2 * k)?,
                        Some(aug) => gnn_identity_relevance(aug, i, j, 2 * k)?,
                    };
                    let dev = (ours - oracle).abs();
                    if dev > max_dev {
                        max_dev = dev;
                        if dev > TOLERANCE {
                            failing.get_or_insert((g.clone(), i, j, k));
                        }
                    }
                }
            }
        }
    }

    let oracle_name = if args.theorem == 1 {
        "walk-meeting probability"
    } else {
        "augmented-graph relevance at doubled depth"
    };
    println!(
        "theorem {}: {} graph(s) (<= {} nodes), depths 1..=3, max |identity relevance - {}| = {:.3e}",
        args.theorem, args.trials, max_nodes, oracle_name, max_dev
    );
    if let Some((g, i, j, k)) = failing {
        let nodes = args.dump_dir.join(format!("theorem{}_failing_nodes.tsv", args.theorem));
        let edges = args.dump_dir.join(format!("theorem{}_failing_edges.tsv", args.theorem));
        write_nodes_tsv(&g, &LabelTable::new(), &nodes)?;
        write_edges_tsv(&g, &edges)?;
        println!(
            "FAIL: pair ({}, {}) at depth {k} deviates by more than {TOLERANCE:.0e}; \
             graph dumped to {} and {}",
            g.node_name(i),
            g.node_name(j),
            nodes.display(),
            edges.display()
        );
        return Ok(1);
    }
    println!("PASS: within {TOLERANCE:.0e}");
    Ok(0)
}

/// Theorem 3: one-hot messages of all unordered node pairs are distinct.
fn run_injectivity(args: &VerifyArgs) -> Result<i32, CliError> {
    let n = args.max_nodes.unwrap_or(MAX_ONEHOT_NODES);
    if n > MAX_ONEHOT_NODES {
        return Err(CliError::usage(format!(
            "--max-nodes is capped at {MAX_ONEHOT_NODES} for theorem 3"
        )));
    }
    if n == 0 {
        return Err(CliError::usage("--max-nodes must be at least 1"));
    }

    let weight = sum_extractor(n);
    let one_hot = |i: usize| {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        row
    };
    let mut seen: std::collections::HashMap<Vec<u64>, (usize, usize)> =
        std::collections::HashMap::new();
    let mut total = 0usize;
    for i in 0..n {
        for j in i..n {
            let message = apply_message_weight(&weight, &one_hot(i), &one_hot(j));
            let key: Vec<u64> = message.iter().map(|x| x.to_bits()).collect();
            total += 1;
            if let Some(&(pi, pj)) = seen.get(&key) {
                println!(
                    "theorem 3: {n} one-hot nodes, collision between pairs ({pi}, {pj}) and ({i}, {j})"
                );
                println!("FAIL: messages are not pairwise distinct");
                return Ok(1);
            }
            seen.insert(key, (i, j));
        }
    }
    println!(
        "theorem 3: {n} one-hot nodes, {total} unordered pair messages, all distinct"
    );
    println!("PASS: the message map is injective on one-hot pairs");
    Ok(0)
}
