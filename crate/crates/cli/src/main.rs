//! Command-line front end: reproducible experiments over plain-text inputs.
//! Exit codes: 0 success, 1 domain error (one-line diagnostic), 2 usage.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use nilkit::abelian::{correlate, gowers_norm, gowers_norm_naive};
use nilkit::lift::{
    heisenberg_orbit, lift_through_fibration, minimal_period_lift_search, LiftReport,
};
use nilkit::linalg::Int;
use nilkit::matrix::UnipotentMatrix;
use nilkit::nilseq::{obstruction_report, project};
use nilkit::polymap::{explicit_period_bound, hall_petresco, MultiIndex, PolyMap};
use nilkit::textio;
use nilkit::Error as NkError;

#[derive(Parser)]
#[command(
    name = "nilkit",
    version,
    about = "Exact experiments with filtered unipotent groups, polynomial maps and Gowers norms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gowers uniformity norm of a complex table.
    Gowers(GowersArgs),
    /// Correlation of two tables, conjugating the second.
    Correlate(CorrelateArgs),
    /// Taylor interpolation of grid values, or evaluation of a polynomial map.
    Taylor(TaylorArgs),
    /// Exact periodicity test, or the explicit period bound from a rationality order.
    Period(PeriodArgs),
    /// Minimal q with g^q in the lattice.
    Rationality(RationalityArgs),
    /// Hall-Petresco coefficients of a pair of group elements.
    Hp(HpArgs),
    /// Lift a periodic polynomial map through a fibration.
    Lift(LiftArgs),
    /// Search for a lift with exact coordinate periods.
    LiftSearch(LiftSearchArgs),
    /// Build a projected nilsequence table by fiberwise averaging.
    Project(ProjectArgs),
    /// Host-Kra cube membership and factorization.
    Cubes(CubesArgs),
    /// Zariski closure of a set of lattice elements; optional membership test.
    Zariski(ZariskiArgs),
    /// Run the bundled invariant suite.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct GowersArgs {
    /// Group as "[d1,d2,...]".
    #[arg(long)]
    group: String,
    /// Table file with `coords ; re ; im` lines.
    #[arg(long)]
    table: PathBuf,
    /// Norm degree s >= 1.
    #[arg(long)]
    s: u32,
    /// Also evaluate the naive defining sum and report both.
    #[arg(long)]
    naive: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    group: String,
    /// First table f.
    #[arg(long)]
    table: PathBuf,
    /// Second table g; the report computes E f(x)·conj(g(x)).
    #[arg(long)]
    table2: PathBuf,
    /// If set, also report U^s norms of both tables.
    #[arg(long)]
    s: Option<u32>,
}

#[derive(Args)]
struct TaylorArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Grid file with `point ; matrix` lines covering the [0, k]^n box.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Polynomial map file for evaluation mode.
    #[arg(long)]
    polymap: Option<PathBuf>,
    /// Evaluation point "x1,x2,...".
    #[arg(long)]
    at: Option<String>,
}

#[derive(Args)]
struct PeriodArgs {
    #[arg(long)]
    lattice: PathBuf,
    #[arg(long)]
    polymap: PathBuf,
    /// Candidate period to test.
    #[arg(long)]
    m: Option<String>,
    /// Rationality order; prints the explicit period bound q^(1+k²(k+1)²/4)·k!.
    #[arg(long)]
    from_q: Option<String>,
}

#[derive(Args)]
struct RationalityArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Matrix file (row-major rationals).
    #[arg(long)]
    matrix: PathBuf,
}

#[derive(Args)]
struct HpArgs {
    #[arg(long)]
    lattice: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    h: PathBuf,
}

#[derive(Args)]
struct LiftArgs {
    /// Fibration file: Y lattice, `---`, X lattice, `psi:` rows.
    #[arg(long)]
    fibration: PathBuf,
    /// Polynomial map into the target X.
    #[arg(long)]
    polymap: PathBuf,
    /// Verified input period M.
    #[arg(long)]
    period: String,
    /// Write the lifted map here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LiftSearchArgs {
    /// Heisenberg instance: search for an (N,M)-periodic lift of the
    /// (1/N, 1/M) orbit map.
    #[arg(long, num_args = 2, value_names = ["N", "M"])]
    heisenberg: Option<Vec<u64>>,
    /// General mode: lattice of Y.
    #[arg(long)]
    lattice: Option<PathBuf>,
    /// Quotient polynomial map (top band dropped).
    #[arg(long)]
    polymap: Option<PathBuf>,
    /// Coordinate periods "P1,P2,...".
    #[arg(long)]
    periods: Option<String>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Surjective homomorphism file (source, target, matrix).
    #[arg(long)]
    tau: PathBuf,
    #[arg(long)]
    lattice: PathBuf,
    /// Polynomial map on the covering group.
    #[arg(long)]
    polymap: PathBuf,
    /// Frequency file (`freqs:` triangle).
    #[arg(long)]
    freq: PathBuf,
    /// Output table path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the sampled lattice-invariance check.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CubesArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Cube file with `vertex ; matrix` lines.
    #[arg(long)]
    cube: PathBuf,
}

#[derive(Args)]
struct ZariskiArgs {
    #[arg(long)]
    lattice: PathBuf,
    /// Generators file: one matrix per line.
    #[arg(long)]
    generators: PathBuf,
    /// Optional membership probe.
    #[arg(long)]
    member: Option<PathBuf>,
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &PathBuf) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_int(s: &str) -> anyhow::Result<Int> {
    s.trim().parse::<Int>().map_err(|e| anyhow!("bad integer `{s}`: {e}"))
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Gowers(a) => {
            let group = textio::parse_group(&a.group)?;
            let table = textio::parse_table(&group, &read(&a.table)?)?;
            let norm = gowers_norm(&table, a.s)?;
            println!("{}", textio::format_f64(norm));
            if a.naive {
                println!("naive: {}", textio::format_f64(gowers_norm_naive(&table, a.s)?));
            }
        }
        Command::Correlate(a) => {
            let group = textio::parse_group(&a.group)?;
            let f = textio::parse_table(&group, &read(&a.table)?)?;
            let g = textio::parse_table(&group, &read(&a.table2)?)?;
            let c = correlate(&f, &g)?;
            println!("re: {}", textio::format_f64(c.re));
            println!("im: {}", textio::format_f64(c.im));
            println!("abs: {}", textio::format_f64(c.norm()));
            if let Some(s) = a.s {
                println!("gowers_f: {}", textio::format_f64(gowers_norm(&f, s)?));
                println!("gowers_g: {}", textio::format_f64(gowers_norm(&g, s)?));
            }
        }
        Command::Taylor(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            match (&a.grid, &a.polymap) {
                (Some(grid), None) => {
                    let mut points: BTreeMap<Vec<i64>, UnipotentMatrix> = BTreeMap::new();
                    let mut arity = None;
                    for line in read(grid)?.lines() {
                        let line = line.trim();
                        if line.is_empty() || line.starts_with('#') {
                            continue;
                        }
                        let (p, m) = line
                            .split_once(';')
                            .ok_or_else(|| anyhow!("grid line must be `point ; matrix`"))?;
                        let pt: Vec<i64> = if p.trim().is_empty() {
                            vec![]
                        } else {
                            p.split(',')
                                .map(|v| v.trim().parse().map_err(|e| anyhow!("grid point: {e}")))
                                .collect::<anyhow::Result<_>>()?
                        };
                        arity.get_or_insert(pt.len());
                        points.insert(pt, textio::parse_matrix(m)?);
                    }
                    let arity = arity.ok_or_else(|| anyhow!("empty grid"))?;
                    let pm = PolyMap::interpolate(&fl, arity, 0, &mut |x: &[i64]| {
                        points
                            .get(x)
                            .cloned()
                            .ok_or_else(|| NkError::Parse(format!("grid is missing point {x:?}")))
                    })?;
                    print!("{}", textio::format_polymap(&pm));
                }
                (None, Some(pm_path)) => {
                    let pm = textio::parse_polymap(&fl, &read(pm_path)?)?;
                    let at = a.at.ok_or_else(|| anyhow!("--at is required with --polymap"))?;
                    let x: Vec<Int> = if at.trim().is_empty() {
                        vec![]
                    } else {
                        at.split(',').map(parse_int).collect::<anyhow::Result<_>>()?
                    };
                    println!("{}", textio::format_matrix(&pm.eval(&x)?));
                }
                _ => bail!("taylor needs exactly one of --grid (interpolate) or --polymap --at (evaluate)"),
            }
        }
        Command::Period(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let pm = textio::parse_polymap(&fl, &read(&a.polymap)?)?;
            match (&a.m, &a.from_q) {
                (Some(m), None) => {
                    let m = parse_int(m)?;
                    println!("periodic: {}", pm.is_periodic_uniform(&m)?);
                }
                (None, Some(q)) => {
                    let q = parse_int(q)?;
                    println!("period: {}", pm.period_from_rational(&q)?);
                }
                _ => bail!("period needs exactly one of --m or --from-q"),
            }
        }
        Command::Rationality(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let g = textio::parse_matrix(&read(&a.matrix)?)?;
            match fl.rationality_order(&g)? {
                Some(q) => println!("q: {q}"),
                None => println!("q: none"),
            }
        }
        Command::Hp(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let g = textio::parse_matrix(&read(&a.g)?)?;
            let h = textio::parse_matrix(&read(&a.h)?)?;
            let cs = hall_petresco(&fl, &g, &h)?;
            for (i, c) in cs.iter().enumerate() {
                println!("c{}: {}", i + 2, textio::format_matrix(c));
            }
            if cs.is_empty() {
                println!("c: none (degree 1)");
            }
        }
        Command::Lift(a) => {
            let phi = textio::parse_fibration(&read(&a.fibration)?)?;
            let f = textio::parse_polymap(phi.target(), &read(&a.polymap)?)?;
            let m = parse_int(&a.period)?;
            let (lifted, report) = lift_through_fibration(&phi, &f, &m)?;
            let text = textio::format_polymap(&lifted);
            match &a.out {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            print_report(&report);
        }
        Command::LiftSearch(a) => {
            let (fl, f, periods) = if let Some(nm) = &a.heisenberg {
                let (n, m) = (nm[0], nm[1]);
                let (fl, f) = heisenberg_orbit(n, m)?;
                (fl, f, vec![Int::from(n), Int::from(m)])
            } else {
                let lattice = a.lattice.ok_or_else(|| anyhow!("--lattice required without --heisenberg"))?;
                let polymap = a.polymap.ok_or_else(|| anyhow!("--polymap required without --heisenberg"))?;
                let periods = a.periods.ok_or_else(|| anyhow!("--periods required without --heisenberg"))?;
                let fl = textio::parse_lattice(&read(&lattice)?)?;
                let q = fl.quotient_drop_top();
                let f = textio::parse_polymap(&q, &read(&polymap)?)?;
                let periods: Vec<Int> =
                    periods.split(',').map(parse_int).collect::<anyhow::Result<_>>()?;
                (fl, f, periods)
            };
            match minimal_period_lift_search(&fl, &f, &periods)? {
                Some(lift) => {
                    let ps: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
                    println!("lift with exact periods ({})", ps.join(","));
                    print!("{}", textio::format_polymap(&lift));
                }
                None => {
                    let g = periods
                        .iter()
                        .fold(Int::from(0), |acc, p| num_integer::gcd(acc, p.clone()));
                    println!("no exact-period lift (gcd={g})");
                }
            }
        }
        Command::Project(a) => {
            let tau = textio::parse_hom(&read(&a.tau)?)?;
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let g = textio::parse_polymap(&fl, &read(&a.polymap)?)?;
            let freq = textio::parse_freqs(&fl, &read(&a.freq)?)?;
            let phi = project(&tau, &g, &freq, a.seed)?;
            let text = textio::format_table(&phi.table);
            match &a.out {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            eprintln!("rank_preserving: {}", phi.rank_preserving);
        }
        Command::Cubes(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let cube = textio::parse_cube(&read(&a.cube)?)?;
            match nilkit::cubes::hk_cube_factor(&fl, &cube) {
                Ok(factors) => {
                    println!("member: true");
                    for (v, g) in factors {
                        let bits: String =
                            (0..cube.n).map(|i| if v >> i & 1 == 1 { '1' } else { '0' }).collect();
                        println!("{} ; {}", bits, textio::format_matrix(&g));
                    }
                }
                Err(witness) => {
                    let bits: String = (0..cube.n)
                        .map(|i| if witness >> i & 1 == 1 { '1' } else { '0' })
                        .collect();
                    println!("member: false");
                    println!("witness: {bits}");
                }
            }
        }
        Command::Zariski(a) => {
            let fl = textio::parse_lattice(&read(&a.lattice)?)?;
            let mut gens = Vec::new();
            for line in read(&a.generators)?.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                gens.push(textio::parse_matrix(line)?);
            }
            let basis = fl.zariski_span(&gens)?;
            println!("dimension: {}", basis.rank());
            for b in &basis.basis {
                let coords: Vec<String> = b.upper_coords().iter().map(textio::format_rat).collect();
                println!("basis: {}", coords.join(" "));
            }
            if let Some(member) = &a.member {
                let g = textio::parse_matrix(&read(member)?)?;
                println!("member: {}", basis.member(&g)?);
            }
        }
        Command::Selfcheck(a) => {
            return selfcheck(a.seed);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &LiftReport) {
    println!("input_period: {}", r.input_period);
    println!("output_period: {}", r.output_period);
    println!("q: {}", r.q);
    println!("q_prime: {}", r.q_prime);
    for (t, c) in &r.corrections {
        let idx: Vec<String> = t.0.iter().map(|v| v.to_string()).collect();
        println!("correction {} ; {}", idx.join(","), textio::format_matrix(c));
    }
}

/// Deterministic invariant suite: the concrete quantitative instances plus
/// seeded random spot checks of the structural identities.
fn selfcheck(seed: u64) -> anyhow::Result<ExitCode> {
    use nilkit::filtered::FilteredLattice;
    use rand::{Rng, SeedableRng};

    let mut passed = 0usize;
    let mut failed = 0usize;
    let mut check = |name: &str, ok: bool| {
        if ok {
            println!("PASS {name}");
            passed += 1;
        } else {
            println!("FAIL {name}");
            failed += 1;
        }
        ok
    };

    // Heisenberg coprimality: an exact-period lift exists iff gcd(N,M)=1.
    {
        let fl = FilteredLattice::heisenberg();
        let mut all_ok = true;
        for n in 2..=6u64 {
            for m in 2..=6u64 {
                let (_, f) = heisenberg_orbit(n, m)?;
                let found = minimal_period_lift_search(&fl, &f, &[Int::from(n), Int::from(m)])?;
                let expect = num_integer::gcd(n, m) == 1;
                if found.is_some() != expect {
                    all_ok = false;
                }
                if let Some(lift) = found {
                    all_ok &= lift.is_periodic(&[Int::from(n), Int::from(m)])?;
                }
            }
        }
        check("heisenberg coprimality (N,M in 2..=6)", all_ok);
    }

    // Explicit period bound instances.
    check(
        "period bound k=2 q=2 -> 2048",
        explicit_period_bound(&Int::from(2), 2) == Int::from(2048),
    );
    check("period bound k=1 q=3 -> 9", explicit_period_bound(&Int::from(3), 1) == Int::from(9));
    check("period bound q=1 -> k!", explicit_period_bound(&Int::from(1), 3) == Int::from(6));

    // Hall-Petresco on seeded random pairs (extraction verifies the identity
    // internally for n = 0..2k).
    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let fl = FilteredLattice::heisenberg();
        let mut ok = true;
        for _ in 0..20 {
            let g = nilkit::nilseq::random_group_element(&fl, &mut rng);
            let h = nilkit::nilseq::random_group_element(&fl, &mut rng);
            ok &= hall_petresco(&fl, &g, &h).is_ok();
        }
        check("hall-petresco identity (20 random pairs)", ok);
    }

    // Uniform rationality: random words over 2-rational generators.
    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let fl = FilteredLattice::heisenberg();
        // q-th roots of lattice elements are exactly the q-rational ones.
        let gens: Vec<UnipotentMatrix> = (0..3)
            .map(|_| {
                let mut gamma = UnipotentMatrix::identity(3);
                for (i, j) in fl.positions() {
                    let n: i64 = rng.gen_range(-3..=3);
                    gamma.set_entry(i, j, nilkit::matrix::rat(n, 1));
                }
                nilkit::matrix::rat_pow(&gamma, &nilkit::matrix::rat(1, 2))
            })
            .collect();
        let mut ok = true;
        for _ in 0..30 {
            let len = rng.gen_range(0..=5);
            let word: Vec<(usize, i64)> =
                (0..len).map(|_| (rng.gen_range(0..3), rng.gen_range(-3i64..=3))).collect();
            let (pass, _) = fl.word_power_check(&gens, 2, &word)?;
            ok &= pass;
        }
        check("uniform rationality (30 random words, q=2)", ok);
    }

    // Projected nilsequence: the quadratic Z/4 -> Z/2 example gives (1, i).
    {
        let fl = FilteredLattice::abelian_torus(2);
        let z4 = nilkit::abelian::FiniteAbelianGroup::new(vec![4])?;
        let z2 = nilkit::abelian::FiniteAbelianGroup::new(vec![2])?;
        let tau = nilkit::abelian::AbelianHom::new(z4, z2, vec![vec![1]])?;
        let mut coeffs = BTreeMap::new();
        coeffs.insert(
            MultiIndex(vec![1]),
            UnipotentMatrix::elementary(2, 0, 1, nilkit::matrix::rat(1, 4)),
        );
        coeffs.insert(
            MultiIndex(vec![2]),
            UnipotentMatrix::elementary(2, 0, 1, nilkit::matrix::rat(1, 2)),
        );
        let g = PolyMap::new(1, fl.clone(), coeffs)?;
        let freq = nilkit::nilseq::FrequencySpec::new(&fl, vec![1])?;
        let phi = project(&tau, &g, &freq, seed)?;
        let ok = (phi.table.values[0] - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-12
            && (phi.table.values[1] - num_complex::Complex64::new(0.0, 1.0)).norm() < 1e-12;
        check("projected nilsequence quadratic example -> (1, i)", ok);

        let f = phi.table.clone();
        let rep = obstruction_report(&f, &phi, 2)?;
        check(
            "pullback norm identity for U^3",
            (rep.gowers - rep.gowers_pullback).abs() < 1e-9,
        );
    }

    // Gowers: quadratic phase on Z/5 has U^2 norm 5^{-1/4}.
    {
        let z5 = nilkit::abelian::FiniteAbelianGroup::new(vec![5])?;
        let f = nilkit::abelian::ComplexTable::from_fn(z5, |x| {
            nilkit::abelian::e(&nilkit::matrix::rat(x.coords[0] * x.coords[0], 5))
        });
        let v = gowers_norm(&f, 2)?;
        check("gowers quadratic phase = 5^{-1/4}", (v - 5f64.powf(-0.25)).abs() < 1e-6);
    }

    // Product-set closure under products and inverses (m = (4, 1)).
    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let fl = FilteredLattice::heisenberg();
        let m = [Int::from(4), Int::from(1)];
        let mut ok = true;
        for _ in 0..20 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let mut g1 = UnipotentMatrix::identity(3);
                g1.set_entry(0, 1, nilkit::matrix::rat(rng.gen_range(-3i64..=3), 1));
                g1.set_entry(1, 2, nilkit::matrix::rat(rng.gen_range(-3i64..=3), 1));
                let g2 = UnipotentMatrix::elementary(3, 0, 2, nilkit::matrix::rat(rng.gen_range(-3i64..=3), 1));
                g1.int_pow(&Int::from(4)).mul(&g2)
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            ok &= fl.product_set_factor(&a, &m)?.is_some();
            ok &= fl.product_set_factor(&a.mul(&b), &m)?.is_some();
            ok &= fl.product_set_factor(&a.inverse(), &m)?.is_some();
        }
        check("product-set closure (20 random pairs, m = (4,1))", ok);
    }

    // Zariski span of the Heisenberg lattice generators is 3-dimensional.
    {
        let fl = FilteredLattice::heisenberg();
        let gens = vec![
            UnipotentMatrix::elementary(3, 0, 1, nilkit::matrix::rat(1, 1)),
            UnipotentMatrix::elementary(3, 1, 2, nilkit::matrix::rat(1, 1)),
        ];
        let basis = fl.zariski_span(&gens)?;
        let member = basis.member(&UnipotentMatrix::elementary(3, 0, 2, nilkit::matrix::rat(1, 7)))?;
        check("zariski span closes on the bracket (dim 3, member test)", basis.rank() == 3 && member);
    }

    // Mal'cev reduction: rep·γ = g and idempotence on random elements.
    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let fl = FilteredLattice::heisenberg();
        let mut ok = true;
        for _ in 0..20 {
            let g = nilkit::nilseq::random_group_element(&fl, &mut rng);
            let (coords, gamma) = nilkit::nilseq::malcev_reduce(&fl, &g)?;
            let mut rep = UnipotentMatrix::identity(3);
            for (&(i, j), v) in coords.positions.iter().zip(&coords.values) {
                rep.set_entry(i, j, v.clone());
            }
            ok &= rep.mul(&gamma) == g;
            let (coords2, gamma2) = nilkit::nilseq::malcev_reduce(&fl, &rep)?;
            ok &= coords2.values == coords.values && gamma2.is_identity();
        }
        check("malcev reduction: exact factorization and idempotence", ok);
    }

    println!("passed: {passed}");
    println!("failed: {failed}");
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
