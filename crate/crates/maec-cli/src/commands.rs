//! Implementations of the subcommands and their deterministic emitters.
//!
//! Every report is rendered into one `String` before anything is written, so
//! a run either delivers the complete report or fails with no partial output.
//! JSON objects serialize with sorted keys and floats print in Rust's
//! shortest-round-trip form; two runs of the same invocation are
//! byte-identical.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use maec_core::{
    asymptotic_masses, chain_sweep_with_trace, dmc_alpha_capacity, generic_minus, generic_plus,
    maec_to_dmc, minus_transform, plus_transform, transform, units_of, verify_equivalences, Alpha,
    ChannelSpec, DivisorLattice, EnsembleSource, ExactMass, LogBase, MaecDistribution, Mass,
    PolarEnsemble, Sign, Unit, DEFAULT_STEP_GUARD, ORACLE_MAX_Q, ORACLE_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::{
    AsymptoticArgs, CapacityArgs, Command, DirectionArg, FormatArg, LogBaseArg, ModeArg,
    PolarizeArgs, TransformArgs, VerifyArgs,
};

/// Deepest exhaustive enumeration accepted without `--allow-deep`.
const ENUMERATION_GUARD: u32 = 20;

/// Dispatch a parsed command; `Ok(false)` means a verification check failed.
pub fn run(command: Command) -> Result<bool> {
    match command {
        Command::Capacity(args) => {
            match args.mode {
                ModeArg::Exact => cmd_capacity::<ExactMass>(&args),
                ModeArg::Float => cmd_capacity::<f64>(&args),
            }?;
            Ok(true)
        }
        Command::Transform(args) => {
            match args.mode {
                ModeArg::Exact => cmd_transform::<ExactMass>(&args),
                ModeArg::Float => cmd_transform::<f64>(&args),
            }?;
            Ok(true)
        }
        Command::Polarize(args) => {
            match args.mode {
                ModeArg::Exact => cmd_polarize::<ExactMass>(&args),
                ModeArg::Float => cmd_polarize::<f64>(&args),
            }?;
            Ok(true)
        }
        Command::Asymptotic(args) => {
            cmd_asymptotic(&args)?;
            Ok(true)
        }
        Command::Verify(args) => cmd_verify(&args),
    }
}

fn cmd_capacity<S: Mass>(args: &CapacityArgs) -> Result<()> {
    let eps: MaecDistribution<S> = load_channel(&args.input)?;
    let alphas = requested_alphas(&args.alphas)?;
    let base = log_base(args.log_base);
    let overlap = eps.bhattacharyya();
    let error_probability = eps.error_probability();

    let text = match args.out.format {
        FormatArg::Json => {
            let mut report = Map::new();
            report.insert("q".into(), json!(eps.q()));
            report.insert("mode".into(), json!(S::MODE));
            report.insert("log_base".into(), json!(log_base_key(args.log_base)));
            let rows = alphas
                .iter()
                .map(|&alpha| {
                    let mut row = Map::new();
                    row.insert("alpha".into(), json!(alpha_key(alpha)));
                    row.insert("capacity".into(), json!(eps.alpha_capacity(alpha, base)));
                    if let Some(argument) = eps.capacity_log_argument(alpha) {
                        row.insert("log_argument".into(), mass_value(&argument));
                    }
                    Value::Object(row)
                })
                .collect();
            report.insert("capacities".into(), Value::Array(rows));
            report.insert("overlap".into(), mass_value(&overlap));
            report.insert("error_probability".into(), mass_value(&error_probability));
            render_json(Value::Object(report))
        }
        FormatArg::Csv => {
            let mut text = String::from("alpha,capacity\n");
            for &alpha in &alphas {
                text.push_str(&format!(
                    "{},{}\n",
                    alpha_key(alpha),
                    eps.alpha_capacity(alpha, base)
                ));
            }
            text.push_str("\nparameter,value\n");
            text.push_str(&format!("overlap,{overlap}\n"));
            text.push_str(&format!("error_probability,{error_probability}\n"));
            text
        }
    };
    deliver(&text, args.out.output.as_deref())
}

fn cmd_transform<S: Mass>(args: &TransformArgs) -> Result<()> {
    let eps: MaecDistribution<S> = load_channel(&args.input)?;
    let second: MaecDistribution<S> = match &args.with {
        Some(path) => load_channel(path)?,
        None => eps.clone(),
    };
    let sign = match args.direction {
        DirectionArg::Minus => Sign::Minus,
        DirectionArg::Plus => Sign::Plus,
    };
    let result = transform(sign, &eps, &second)?;

    let text = match args.out.format {
        // The JSON form is a channel file: it feeds straight back into --input.
        FormatArg::Json => maec_core::emit_json(&result),
        FormatArg::Csv => {
            let mut text = String::from("divisor,mass\n");
            for (pos, &divisor) in result.lattice().divisors().iter().enumerate() {
                text.push_str(&format!("{divisor},{}\n", result.mass(pos)));
            }
            text
        }
    };
    deliver(&text, args.out.output.as_deref())
}

fn cmd_polarize<S: Mass>(args: &PolarizeArgs) -> Result<()> {
    let eps: MaecDistribution<S> = load_channel(&args.input)?;
    let delta =
        S::parse_mass(&args.delta).with_context(|| format!("parsing --delta {:?}", args.delta))?;
    if delta <= S::zero() || delta >= S::from_ratio(1, 2) {
        bail!("--delta must sit strictly between 0 and 1/2, got {delta}");
    }

    let ensemble = match args.samples {
        Some(samples) => {
            if samples == 0 {
                bail!("--samples must be at least 1");
            }
            PolarEnsemble::sampled(&eps, args.steps, samples, args.seed)?
        }
        None => {
            let guard = if args.allow_deep { DEFAULT_STEP_GUARD } else { ENUMERATION_GUARD };
            if args.steps > guard {
                if args.allow_deep {
                    bail!("exhaustive enumeration is capped at {DEFAULT_STEP_GUARD} steps");
                }
                bail!(
                    "enumerating 2^{} branches exceeds the {ENUMERATION_GUARD}-step guard; \
                     pass --allow-deep or --samples to go deeper",
                    args.steps
                );
            }
            PolarEnsemble::exhaustive_with_guard(&eps, args.steps, guard)?
        }
    };

    let base = log_base(args.log_base);
    let capacities = ensemble.capacities(Alpha::One, base);
    // Ascending capacity; ties break by branch weight, then input order.
    let mut order: Vec<usize> = (0..ensemble.len()).collect();
    order.sort_by(|&a, &b| {
        capacities[a]
            .total_cmp(&capacities[b])
            .then_with(|| ensemble.weight(a).cmp(&ensemble.weight(b)))
            .then_with(|| a.cmp(&b))
    });
    let divisors = eps.lattice().divisors().to_vec();

    let text = match args.out.format {
        FormatArg::Json => {
            let mut report = Map::new();
            report.insert("q".into(), json!(eps.q()));
            report.insert("mode".into(), json!(S::MODE));
            report.insert("log_base".into(), json!(log_base_key(args.log_base)));
            report.insert("steps".into(), json!(args.steps));
            report.insert("delta".into(), mass_value(&delta));
            match ensemble.source() {
                EnsembleSource::Exhaustive => {
                    report.insert("source".into(), json!("exhaustive"));
                }
                EnsembleSource::Sampled { samples, seed } => {
                    report.insert("source".into(), json!("sampled"));
                    report.insert("samples".into(), json!(samples));
                    report.insert("seed".into(), json!(seed));
                }
            }
            let branches = order
                .iter()
                .enumerate()
                .map(|(rank, &row)| {
                    let mut entry = Map::new();
                    entry.insert("rank".into(), json!(rank + 1));
                    entry.insert("branch_weight".into(), json!(ensemble.weight(row)));
                    entry.insert("capacity".into(), json!(capacities[row]));
                    Value::Object(entry)
                })
                .collect();
            report.insert("branches".into(), Value::Array(branches));
            let summary = divisors
                .iter()
                .enumerate()
                .map(|(pos, &divisor)| {
                    let proportions = ensemble.proportions(pos, &delta);
                    let mut entry = Map::new();
                    entry.insert("divisor".into(), json!(divisor));
                    entry.insert("mu_n".into(), mass_value(&ensemble.mean_mass(pos)));
                    entry.insert("prop_near_one".into(), json!(proportions.fraction_near_one()));
                    entry
                        .insert("prop_near_zero".into(), json!(proportions.fraction_near_zero()));
                    entry.insert(
                        "prop_intermediate".into(),
                        json!(proportions.fraction_intermediate()),
                    );
                    Value::Object(entry)
                })
                .collect();
            report.insert("summary".into(), Value::Array(summary));
            render_json(Value::Object(report))
        }
        FormatArg::Csv => {
            let mut text = String::from("rank,branch_weight,capacity\n");
            for (rank, &row) in order.iter().enumerate() {
                text.push_str(&format!(
                    "{},{},{}\n",
                    rank + 1,
                    ensemble.weight(row),
                    capacities[row]
                ));
            }
            text.push_str("\ndivisor,mu_n,prop_near_one,prop_near_zero,prop_intermediate\n");
            for (pos, &divisor) in divisors.iter().enumerate() {
                let proportions = ensemble.proportions(pos, &delta);
                text.push_str(&format!(
                    "{divisor},{},{},{},{}\n",
                    ensemble.mean_mass(pos),
                    proportions.fraction_near_one(),
                    proportions.fraction_near_zero(),
                    proportions.fraction_intermediate()
                ));
            }
            text
        }
    };
    deliver(&text, args.out.output.as_deref())
}

fn cmd_asymptotic(args: &AsymptoticArgs) -> Result<()> {
    if args.mode == ModeArg::Float {
        bail!("the limit solver compares masses for exact order; use --mode exact");
    }
    if args.trace && args.out.format == FormatArg::Csv {
        bail!("the sweep trace is only available with --format json");
    }
    let eps: MaecDistribution<ExactMass> = load_channel(&args.input)?;
    let (limit, trace) = if args.trace {
        let (limit, trace) = chain_sweep_with_trace(&eps)?;
        (limit, Some(trace))
    } else {
        (asymptotic_masses(&eps)?, None)
    };
    let masses = limit.distribution();

    let text = match args.out.format {
        FormatArg::Json => {
            let mut report = Map::new();
            report.insert("q".into(), json!(limit.q()));
            report.insert("method".into(), json!(limit.method().tag()));
            let rows = masses
                .lattice()
                .divisors()
                .iter()
                .enumerate()
                .map(|(pos, &divisor)| {
                    let mut entry = Map::new();
                    entry.insert("divisor".into(), json!(divisor));
                    entry.insert("mass".into(), Value::String(masses.mass(pos).to_string()));
                    Value::Object(entry)
                })
                .collect();
            report.insert("masses".into(), Value::Array(rows));
            report.insert("support_divisors".into(), json!(limit.support_divisors()));
            if let Some(trace) = &trace {
                report.insert("trace".into(), trace.to_json());
            }
            render_json(Value::Object(report))
        }
        FormatArg::Csv => {
            let mut text = String::from("divisor,mass\n");
            for (pos, &divisor) in masses.lattice().divisors().iter().enumerate() {
                text.push_str(&format!("{divisor},{}\n", masses.mass(pos)));
            }
            text
        }
    };
    deliver(&text, args.out.output.as_deref())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool> {
    if args.q > ORACLE_MAX_Q {
        bail!(
            "alphabet {} is past the verification bound q <= {}: the cross-check materializes \
             full transition matrices, which is only feasible for desk-size alphabets",
            args.q,
            ORACLE_MAX_Q
        );
    }
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let lattice = Arc::new(DivisorLattice::new(args.q)?);
    let units = units_of(args.q);
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let orders =
        [Alpha::Zero, Alpha::Finite(0.5), Alpha::One, Alpha::Finite(2.0), Alpha::Infinity];

    // Exact lane: the four output remappings must reconstruct the one-step
    // transforms identically, and the closed-form channel parameters must
    // match their defining sums. Float lane: capacities of the raw joint
    // transform matrices must match the closed forms on the recursed vectors.
    let mut remap_exact = true;
    let mut remap_deviation = 0.0f64;
    let mut closed_form_deviation = 0.0f64;
    let mut joint_deviation = 0.0f64;

    for _ in 0..args.trials {
        let eps = random_exact_channel(&lattice, &mut rng);
        let eps2 = random_exact_channel(&lattice, &mut rng);
        let float1 = to_float(&eps)?;
        let float2 = to_float(&eps2)?;
        let w1 = maec_to_dmc(&float1)?;
        let w2 = maec_to_dmc(&float2)?;
        let worse = minus_transform(&float1, &float2)?;
        let better = plus_transform(&float1, &float2)?;

        for &value in &units {
            let gamma = Unit::new(value, args.q)?;
            let report = verify_equivalences(&eps, &eps2, gamma)?;
            remap_exact &= report.worse_merge_exact
                && report.worse_split_exact
                && report.better_merge_exact
                && report.better_split_exact;
            remap_deviation = remap_deviation.max(report.reconstruction_deviation);
            closed_form_deviation = closed_form_deviation
                .max(report.capacity_deviation)
                .max(report.bhattacharyya_deviation)
                .max(report.error_probability_deviation);

            let joint_worse = generic_minus(&w1, &w2, gamma)?;
            let joint_better = generic_plus(&w1, &w2, gamma)?;
            for alpha in orders {
                let base = LogBase::AlphabetSize;
                let dev_worse = (dmc_alpha_capacity(&joint_worse, alpha, base)
                    - worse.alpha_capacity(alpha, base))
                .abs();
                let dev_better = (dmc_alpha_capacity(&joint_better, alpha, base)
                    - better.alpha_capacity(alpha, base))
                .abs();
                joint_deviation = joint_deviation.max(dev_worse).max(dev_better);
            }
        }
    }

    let pair_cases = args.trials * units.len();
    let rows = [
        (
            "output_remappings_reconstruct_transforms",
            pair_cases,
            remap_deviation,
            remap_exact && remap_deviation == 0.0,
        ),
        (
            "closed_forms_match_matrix_definitions",
            args.trials * 2,
            closed_form_deviation,
            closed_form_deviation <= ORACLE_TOLERANCE,
        ),
        (
            "joint_transform_capacities_match_closed_forms",
            pair_cases,
            joint_deviation,
            joint_deviation <= ORACLE_TOLERANCE,
        ),
    ];
    let passed = rows.iter().all(|row| row.3);

    let mut report = Map::new();
    report.insert("q".into(), json!(args.q));
    report.insert("trials".into(), json!(args.trials));
    report.insert("seed".into(), json!(args.seed));
    report.insert("units".into(), json!(units));
    report.insert("passed".into(), json!(passed));
    let checks = rows
        .iter()
        .map(|&(name, cases, max_deviation, ok)| {
            let mut entry = Map::new();
            entry.insert("name".into(), json!(name));
            entry.insert("cases".into(), json!(cases));
            entry.insert("max_deviation".into(), json!(max_deviation));
            entry.insert("passed".into(), json!(ok));
            Value::Object(entry)
        })
        .collect();
    report.insert("checks".into(), Value::Array(checks));

    let text = render_json(Value::Object(report));
    deliver(&text, args.output.as_deref())?;
    Ok(passed)
}

/// Parse and validate a channel file in the scalar mode of the command.
fn load_channel<S: Mass>(path: &Path) -> Result<MaecDistribution<S>> {
    let spec = ChannelSpec::from_path(path)?;
    let channel = spec
        .build::<S>()
        .with_context(|| format!("building the channel in {}", path.display()))?;
    Ok(channel)
}

/// Uniformly weighted rational channel: integer weights 0..=16 per divisor,
/// normalized (the last divisor picks up weight 1 if the draw is all zero).
fn random_exact_channel(
    lattice: &Arc<DivisorLattice>,
    rng: &mut ChaCha8Rng,
) -> MaecDistribution<ExactMass> {
    let count = lattice.divisors().len();
    let mut weights: Vec<u64> = (0..count).map(|_| rng.gen_range(0..=16u64)).collect();
    if weights.iter().all(|&w| w == 0) {
        weights[count - 1] = 1;
    }
    let total: u64 = weights.iter().sum();
    let masses = weights.iter().map(|&w| ExactMass::from_ratio(w, total)).collect();
    MaecDistribution::new(Arc::clone(lattice), masses)
        .expect("normalized nonnegative weights form a valid channel")
}

fn to_float(eps: &MaecDistribution<ExactMass>) -> Result<MaecDistribution<f64>> {
    let masses = eps.masses().iter().map(Mass::to_f64).collect();
    Ok(MaecDistribution::new(Arc::clone(eps.lattice()), masses)?)
}

/// The order grid to evaluate: the request in order, or 0, 1/2, 1, 2, ∞.
fn requested_alphas(tokens: &[String]) -> Result<Vec<Alpha>> {
    if tokens.is_empty() {
        return Ok(vec![
            Alpha::Zero,
            Alpha::Finite(0.5),
            Alpha::One,
            Alpha::Finite(2.0),
            Alpha::Infinity,
        ]);
    }
    tokens.iter().map(|token| parse_alpha(token)).collect()
}

fn parse_alpha(token: &str) -> Result<Alpha> {
    let token = token.trim();
    if token.eq_ignore_ascii_case("inf") || token.eq_ignore_ascii_case("infinity") {
        return Ok(Alpha::Infinity);
    }
    let value = if let Some((num, den)) = token.split_once('/') {
        match (num.trim().parse::<f64>(), den.trim().parse::<f64>()) {
            (Ok(n), Ok(d)) if d != 0.0 => n / d,
            _ => bail!("unreadable capacity order {token:?}"),
        }
    } else {
        token
            .parse::<f64>()
            .with_context(|| format!("unreadable capacity order {token:?}"))?
    };
    Ok(Alpha::finite(value)?)
}

/// Stable text key for an order: "0", "1", "inf", or the float's display.
fn alpha_key(alpha: Alpha) -> String {
    match alpha {
        Alpha::Zero => "0".into(),
        Alpha::One => "1".into(),
        Alpha::Infinity => "inf".into(),
        Alpha::Finite(value) => value.to_string(),
    }
}

fn log_base(arg: LogBaseArg) -> LogBase {
    match arg {
        LogBaseArg::Q => LogBase::AlphabetSize,
        LogBaseArg::E => LogBase::Natural,
        LogBaseArg::Two => LogBase::Binary,
    }
}

fn log_base_key(arg: LogBaseArg) -> &'static str {
    match arg {
        LogBaseArg::Q => "q",
        LogBaseArg::E => "e",
        LogBaseArg::Two => "2",
    }
}

/// Exact masses render as fraction strings (lossless); floats as JSON numbers.
fn mass_value<S: Mass>(mass: &S) -> Value {
    if S::IS_EXACT {
        Value::String(mass.to_string())
    } else {
        json!(mass.to_f64())
    }
}

fn render_json(value: Value) -> String {
    let mut text = serde_json::to_string_pretty(&value).expect("reports serialize");
    text.push('\n');
    text
}

fn deliver(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing the report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
