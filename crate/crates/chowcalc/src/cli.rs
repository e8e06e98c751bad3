//! The `chowcalc` command line: degree queries in either basis, the d = 2, 3
//! intersection tables, vanishing sweeps, graph subdivision and orbit
//! canonicalization. Every computation is a thin wrapper over the library
//! API; no arithmetic lives here.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use num_traits::One;

use crate::chow::{
    degree_cube_memo, degree_product, ChowError, Cube, Cycle, DegreeMemo, Monomial, Product,
};
use crate::fourier::{canonical_tuple, f_to_c, orbit_size, orbit_table, FourierCycle};
use crate::simplicial::{subdivide, CubeVertex, OrderedGraph, ProductVertex};
use crate::vanishing::{check_vanishing, DegreeCache, SweepOptions, VanishingError};
use crate::Rational;

#[derive(Parser)]
#[command(
    name = "chowcalc",
    version,
    about = "Local intersection numbers in combinatorial Chow rings of graph products"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree of a cycle over the standard cube I^d, in the C or F basis
    Degree {
        #[arg(long = "d")]
        d: usize,
        /// Basis of the vertex tokens: C (cube vertices) or F (Fourier)
        #[arg(long, value_parser = ["C", "F"])]
        basis: String,
        /// Cycle literal: vertices as bitstrings, optional ^k multiplicity,
        /// optional rational prefix coefficient, monomials joined by "+"
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
        tokens: Vec<String>,
    },
    /// Degree of a cycle over Γ^d for a graph read from a file
    GraphDegree {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "d")]
        d: usize,
        /// Cycle literal: vertices as comma-separated index tuples
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, required = true)]
        tokens: Vec<String>,
    },
    /// Print every nonzero orbit representative of the d = 2 or d = 3 table
    Table {
        #[arg(long = "d")]
        d: usize,
    },
    /// Verify the vanishing condition for dimension d
    Vanishing {
        #[arg(long = "d")]
        d: usize,
        /// Degree cache file, loaded if present and rewritten afterwards
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Worker threads for the sweep
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Required for d >= 5; no runtime bound is promised there
        #[arg(long)]
        allow_long: bool,
    },
    /// Subdivide each edge of a graph into n edges
    Subdivide {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long = "n")]
        n: usize,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Canonical orbit representative and orbit size of a vertex tuple
    Orbits {
        #[arg(long = "d")]
        d: usize,
        #[arg(required = true)]
        tuple: Vec<String>,
    },
}

/// Errors split by exit code: usage/parse problems exit 2, mathematical
/// consistency failures exit 1.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Consistency(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Consistency(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Consistency(m) => m,
        }
    }
}

impl From<ChowError> for CliError {
    fn from(e: ChowError) -> Self {
        match e {
            ChowError::NonIntegerDegree(_)
            | ChowError::InconsistentRelations
            | ChowError::StepCapExceeded(_)
            | ChowError::Underdetermined => CliError::Consistency(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<VanishingError> for CliError {
    fn from(e: VanishingError) -> Self {
        match e {
            VanishingError::SpotCheckFailed(..) | VanishingError::CacheDisagreement(..) => {
                CliError::Consistency(e.to_string())
            }
            VanishingError::Chow(inner) => inner.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<crate::simplicial::SimplicialError> for CliError {
    fn from(e: crate::simplicial::SimplicialError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Runs the CLI on the given argv. Exit code 0 on success, 1 on
/// counterexamples or consistency failures, 2 on usage errors.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    2
                }
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Degree { d, basis, tokens } => cmd_degree(d, &basis, &tokens),
        Command::GraphDegree { graph, d, tokens } => cmd_graph_degree(&graph, d, &tokens),
        Command::Table { d } => cmd_table(d),
        Command::Vanishing {
            d,
            cache,
            jobs,
            allow_long,
        } => cmd_vanishing(d, cache.as_deref(), jobs, allow_long),
        Command::Subdivide { graph, n, out } => cmd_subdivide(&graph, n, out.as_deref()),
        Command::Orbits { d, tuple } => cmd_orbits(d, &tuple),
    }
}

/// A parsed cycle literal: monomials with factor multiplicities and a
/// rational coefficient.
struct Literal<V> {
    terms: Vec<(Vec<(V, u32)>, Rational)>,
}

/// Parses the shared cycle-literal grammar. A token is first tried as a
/// vertex (via `parse_vertex`); failing that, it may open a new monomial as
/// a rational coefficient. Monomials are separated by "+" tokens and factors
/// may carry a "^k" multiplicity.
fn parse_literal<V>(
    tokens: &[String],
    parse_vertex: impl Fn(&str) -> Option<V>,
) -> Result<Literal<V>, CliError> {
    let mut terms: Vec<(Vec<(V, u32)>, Rational)> = Vec::new();
    let mut factors: Vec<(V, u32)> = Vec::new();
    let mut coeff = Rational::one();
    let mut at_start = true;

    let flush = |factors: &mut Vec<(V, u32)>,
                 coeff: &mut Rational,
                 terms: &mut Vec<(Vec<(V, u32)>, Rational)>|
     -> Result<(), CliError> {
        if factors.is_empty() {
            return Err(CliError::Usage("empty monomial in cycle literal".into()));
        }
        terms.push((
            std::mem::take(factors),
            std::mem::replace(coeff, Rational::one()),
        ));
        Ok(())
    };

    for token in tokens {
        if token == "+" {
            flush(&mut factors, &mut coeff, &mut terms)?;
            at_start = true;
            continue;
        }
        let (vertex_part, mult) = match token.split_once('^') {
            Some((v, k)) => {
                let mult: u32 = k
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad multiplicity in token {token:?}")))?;
                if mult == 0 {
                    return Err(CliError::Usage(format!(
                        "multiplicity must be positive in {token:?}"
                    )));
                }
                (v, mult)
            }
            None => (token.as_str(), 1),
        };
        if let Some(v) = parse_vertex(vertex_part) {
            factors.push((v, mult));
            at_start = false;
        } else if at_start && mult == 1 {
            coeff = Rational::from_str(token).map_err(|_| {
                CliError::Usage(format!(
                    "token {token:?} is neither a vertex nor a rational"
                ))
            })?;
            at_start = false;
        } else {
            return Err(CliError::Usage(format!("unrecognized token {token:?}")));
        }
    }
    flush(&mut factors, &mut coeff, &mut terms)?;
    Ok(Literal { terms })
}

fn cube_vertex_parser(d: usize) -> impl Fn(&str) -> Option<CubeVertex> {
    move |s: &str| {
        if s.len() != d || !s.chars().all(|c| c == '0' || c == '1') {
            return None;
        }
        CubeVertex::parse_bits(s).ok().map(|(v, _)| v)
    }
}

fn cmd_degree(d: usize, basis: &str, tokens: &[String]) -> Result<i32, CliError> {
    if d == 0 || d > crate::simplicial::MAX_DIM {
        return Err(CliError::Usage(format!(
            "--d must be between 1 and {}",
            crate::simplicial::MAX_DIM
        )));
    }
    let literal = parse_literal(tokens, cube_vertex_parser(d))?;
    let ambient = Cube::new(d);
    let mut memo = DegreeMemo::new(d);

    let value: Rational = match basis {
        "C" => {
            let cycle = Cycle::from_terms(
                ambient,
                literal
                    .terms
                    .into_iter()
                    .map(|(factors, coeff)| (Monomial::from_factors(factors), coeff)),
            )?;
            degree_cube_memo(&cycle, &mut memo)?
        }
        "F" => {
            let mut total: Option<Cycle<Cube>> = None;
            for (factors, coeff) in literal.terms {
                let mut prod = Cycle::one(ambient.clone());
                for (v, mult) in factors {
                    let expanded = f_to_c(&FourierCycle::basis(d, v));
                    for _ in 0..mult {
                        prod = prod.mul(&expanded)?;
                    }
                }
                let prod = prod.scale(&coeff);
                total = Some(match total {
                    None => prod,
                    Some(acc) => acc.add(&prod)?,
                });
            }
            let total = total.expect("literal has at least one monomial");
            degree_cube_memo(&total, &mut memo)?
        }
        _ => unreachable!("clap restricts the basis values"),
    };
    println!("{value}");
    Ok(0)
}

fn cmd_graph_degree(graph: &Path, d: usize, tokens: &[String]) -> Result<i32, CliError> {
    let g = read_graph(graph)?;
    if d == 0 || d > crate::simplicial::MAX_DIM {
        return Err(CliError::Usage(format!(
            "--d must be between 1 and {}",
            crate::simplicial::MAX_DIM
        )));
    }
    let n = g.vertex_count() as u32;
    let parse_vertex = move |s: &str| -> Option<ProductVertex> {
        let p = ProductVertex::parse(s).ok()?;
        if p.dim() == d && p.0.iter().all(|&c| c < n) {
            Some(p)
        } else {
            None
        }
    };
    let literal = parse_literal(tokens, parse_vertex)?;
    let ambient = Product::new(g, d);
    let cycle = Cycle::from_terms(
        ambient,
        literal
            .terms
            .into_iter()
            .map(|(factors, coeff)| (Monomial::from_factors(factors), coeff)),
    )?;
    let value = degree_product(&cycle)?;
    println!("{value}");
    Ok(0)
}

fn cmd_table(d: usize) -> Result<i32, CliError> {
    if d != 2 && d != 3 {
        return Err(CliError::Usage("table supports --d 2 and --d 3".into()));
    }
    for (tuple, degree) in orbit_table(d)? {
        if degree == 0 {
            continue;
        }
        let rendered: Vec<String> = tuple.iter().map(|v| v.render(d)).collect();
        println!("{}\t{}", rendered.join(" "), degree);
    }
    Ok(0)
}

fn cmd_vanishing(
    d: usize,
    cache_path: Option<&Path>,
    jobs: usize,
    allow_long: bool,
) -> Result<i32, CliError> {
    if d >= 5 && !allow_long {
        return Err(CliError::Usage(
            "d >= 5 is a long run with no time bound; pass --allow-long".into(),
        ));
    }
    let mut cache = match cache_path {
        Some(p) if p.exists() => DegreeCache::load(p, d, 3)?,
        _ => DegreeCache::new(d),
    };
    let opts = SweepOptions {
        jobs,
        progress: if d >= 4 {
            Some(Box::new(|done, total| {
                if done % 50 == 0 || done == total {
                    eprintln!("progress: {done}/{total} orbit degrees");
                }
            }))
        } else {
            None
        },
        // long runs persist partial results and resume from the cache
        checkpoint: cache_path.map(|p| {
            let p = p.to_path_buf();
            Box::new(move |c: &DegreeCache| {
                let _ = c.store(&p);
            }) as Box<dyn Fn(&DegreeCache)>
        }),
        checkpoint_every: 200,
    };
    let report = check_vanishing(d, &mut cache, &opts)?;
    if let Some(p) = cache_path {
        cache.store(p)?;
    }
    print!("{}", report.render_text());
    Ok(if report.verified() { 0 } else { 1 })
}

fn cmd_subdivide(graph: &Path, n: usize, out: Option<&Path>) -> Result<i32, CliError> {
    let g = read_graph(graph)?;
    let subdivided = subdivide(&g, n)?;
    let text = subdivided.to_json_string();
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_orbits(d: usize, tuple_tokens: &[String]) -> Result<i32, CliError> {
    if d == 0 || d > 6 {
        return Err(CliError::Usage("orbits supports 1 <= d <= 6".into()));
    }
    let parse = cube_vertex_parser(d);
    let tuple: Vec<CubeVertex> = tuple_tokens
        .iter()
        .map(|t| {
            parse(t)
                .ok_or_else(|| CliError::Usage(format!("token {t:?} is not a width-{d} bitstring")))
        })
        .collect::<Result<_, _>>()?;
    let key = canonical_tuple(d, &tuple);
    println!("canonical: {}", key.render());
    println!("orbit size: {}", orbit_size(d, &tuple));
    Ok(0)
}

fn read_graph(path: &Path) -> Result<OrderedGraph, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(OrderedGraph::from_json_str(&text)?)
}
