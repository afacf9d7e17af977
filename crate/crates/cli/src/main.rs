mod render;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use cloud_tariff::catalog::{parse_catalog, validate, Catalog, Diagnostic, SHIPPED_CORPUS};
use cloud_tariff::decimal::{format_fixed, parse_decimal};
use cloud_tariff::fitting::{default_grid, fit_two_part, sample_unit_curve, to_fit_points, FitError, SampleGrid};
use cloud_tariff::pareto::{cheapest_coverage, pareto_frontier, CompareError, PlanScore, TieTolerance};
use cloud_tariff::tariff::{
    max_capacity, total_price, unit_price, CapacityGB, Currency, PlanModel, PricingPlan, Segment, TariffError,
};
use num_rational::BigRational;

use render::{OutputFormat, Table};

const DEFAULT_CHEAPEST_GRID: &str = "10:10000:10";

#[derive(Parser)]
#[command(name = "cloud-tariff", version, about = "Price curves, two-part fits and plan comparisons for cloud storage")]
struct Cli {
    /// Plan catalog to read instead of the built-in corpus
    #[arg(long, global = true, env = "CLOUD_TARIFF_CATALOG")]
    catalog: Option<PathBuf>,

    /// Currency for all reported prices
    #[arg(long, global = true, default_value = "EUR")]
    currency: Currency,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,

    /// Tie tolerance for `cheapest`, in currency per GB per month
    #[arg(long, global = true, default_value = "0.001")]
    tie_tol: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total and unit price of one plan on a capacity grid
    UnitPrice {
        plan: String,
        from_gb: String,
        to_gb: String,
        step_gb: String,
        /// Overrides --currency
        currency: Option<Currency>,
        /// Overrides --format
        format: Option<OutputFormat>,
    },
    /// Least-squares two-part approximation of one plan's unit-price curve
    Fit {
        plan: String,
        /// Sampling grid as <from>:<to>:<step> in GB; defaults depend on the plan
        grid: Option<String>,
        /// Overrides --currency
        currency: Option<Currency>,
    },
    /// Pareto frontier of the two-part plans in a segment
    Pareto { segment: Segment },
    /// Cheapest plans of a segment across a capacity grid
    Cheapest {
        segment: Segment,
        /// Grid as <from>:<to>:<step> in GB
        #[arg(default_value = DEFAULT_CHEAPEST_GRID)]
        grid: String,
        /// Restrict the comparison to these comma-separated plan ids
        #[arg(long, value_delimiter = ',')]
        plans: Vec<String>,
    },
    /// Check the catalog and print every diagnostic
    Validate,
    /// List the plans in the catalog
    List,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn lookup(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    fn domain(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 3, error: error.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

impl From<FitError> for Failure {
    fn from(error: FitError) -> Self {
        match error {
            FitError::InvalidGrid(_) => Failure::lookup(error),
            _ => Failure::domain(error),
        }
    }
}

impl From<CompareError> for Failure {
    fn from(error: CompareError) -> Self {
        Failure::domain(error)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out).and_then(|()| out.flush().map_err(|e| Failure::from(anyhow!(e)))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: &Cli, out: &mut impl Write) -> CmdResult {
    if let Command::Validate = cli.command {
        return cmd_validate(cli, out);
    }
    let catalog = load_catalog(cli)?;
    match &cli.command {
        Command::UnitPrice { plan, from_gb, to_gb, step_gb, currency, format } => {
            let grid = SampleGrid::new(capacity(from_gb)?, capacity(to_gb)?, capacity(step_gb)?)?;
            let plan = find_plan(&catalog, plan)?;
            cmd_unit_price(plan, &grid, currency.unwrap_or(cli.currency), format.unwrap_or(cli.format), out)
        }
        Command::Fit { plan, grid, currency } => {
            let plan = find_plan(&catalog, plan)?;
            let grid = match grid {
                Some(text) => SampleGrid::parse(text)?,
                None => default_grid(plan)?,
            };
            cmd_fit(plan, &grid, currency.unwrap_or(cli.currency), cli.format, out)
        }
        Command::Pareto { segment } => cmd_pareto(&catalog, *segment, cli.currency, cli.format, out),
        Command::Cheapest { segment, grid, plans } => {
            let grid = SampleGrid::parse(grid)?;
            let tie = tie_tolerance(&cli.tie_tol)?;
            let members = segment_members(&catalog, *segment, plans)?;
            cmd_cheapest(&members, &grid, &tie, cli.currency, cli.format, out)
        }
        Command::List => cmd_list(&catalog, cli.format, out),
        Command::Validate => unreachable!("handled above"),
    }
}

fn read_source(cli: &Cli) -> Result<Option<Vec<u8>>, Failure> {
    match &cli.catalog {
        None => Ok(None),
        Some(path) => std::fs::read(path)
            .with_context(|| format!("cannot read catalog {}", path.display()))
            .map(Some)
            .map_err(Failure::lookup),
    }
}

fn report(diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("{d}");
    }
}

fn load_catalog(cli: &Cli) -> Result<Catalog, Failure> {
    let Some(bytes) = read_source(cli)? else {
        return Ok(Catalog::shipped());
    };
    match parse_catalog(&bytes) {
        Ok(parsed) => Ok(parsed.catalog),
        Err(diagnostics) => {
            report(&diagnostics);
            let errors = diagnostics.iter().filter(|d| d.is_error()).count();
            Err(Failure::domain(anyhow!("catalog has {errors} error(s)")))
        }
    }
}

fn find_plan<'a>(catalog: &'a Catalog, id: &str) -> Result<&'a PricingPlan, Failure> {
    catalog.get(id).ok_or_else(|| Failure::lookup(anyhow!("unknown plan {id:?}")))
}

fn capacity(text: &str) -> Result<CapacityGB, Failure> {
    CapacityGB::parse(text).map_err(|_| Failure::lookup(anyhow!("invalid capacity {text:?}")))
}

fn tie_tolerance(text: &str) -> Result<TieTolerance, Failure> {
    let value: BigRational = parse_decimal(text)
        .ok()
        .filter(|v| v >= &BigRational::from_integer(0.into()))
        .ok_or_else(|| Failure::lookup(anyhow!("--tie-tol must be a non-negative decimal, got {text:?}")))?;
    Ok(TieTolerance::PerGb(value))
}

fn segment_members(catalog: &Catalog, segment: Segment, only: &[String]) -> Result<Vec<PricingPlan>, Failure> {
    for id in only {
        find_plan(catalog, id)?;
    }
    let members: Vec<PricingPlan> = catalog
        .segment(segment)
        .filter(|p| only.is_empty() || only.contains(&p.id))
        .cloned()
        .collect();
    if members.is_empty() {
        return Err(Failure::lookup(anyhow!("no {segment} plans selected")));
    }
    Ok(members)
}

fn money(value: &BigRational) -> String {
    format_fixed(value, 4)
}

fn float(value: f64) -> String {
    format!("{value:.4}")
}

fn cmd_unit_price(plan: &PricingPlan, grid: &SampleGrid, currency: Currency, format: OutputFormat, out: &mut impl Write) -> CmdResult {
    match &plan.model {
        PlanModel::UnlimitedFlat(_) => {
            return Err(Failure::domain(anyhow!("plan {} has unlimited capacity; its unit price is undefined", plan.id)))
        }
        PlanModel::CapacityOnly(_) => {
            return Err(Failure::domain(anyhow!("plan {} publishes no fees and cannot be priced", plan.id)))
        }
        _ => {}
    }
    let mut table = Table::new(vec!["x_gb", "total_price", "unit_price"]);
    for x in grid.points() {
        let total = match total_price(plan, &x) {
            Ok(total) => money(total.convert(currency).amount()),
            Err(TariffError::CapacityExceeded { .. }) => "-".to_string(),
            Err(e) => return Err(Failure::domain(e)),
        };
        let unit = match unit_price(plan, &x) {
            Ok(unit) => money(unit.convert(currency).amount()),
            Err(TariffError::CapacityExceeded { .. } | TariffError::UndefinedUnitPrice(_)) => "-".to_string(),
            Err(e) => return Err(Failure::domain(e)),
        };
        table.push(vec![x.to_string(), total, unit]);
    }
    table.write(format, out)?;
    Ok(())
}

fn cmd_fit(plan: &PricingPlan, grid: &SampleGrid, currency: Currency, format: OutputFormat, out: &mut impl Write) -> CmdResult {
    let samples = sample_unit_curve(plan, grid, currency)?;
    let fit = fit_two_part(&to_fit_points(&samples))?;
    let mut table = Table::new(vec!["plan", "currency", "f_hat", "v_hat", "rss", "n"]);
    table.push(vec![
        plan.id.clone(),
        currency.to_string(),
        float(fit.f_hat),
        float(fit.v_hat),
        format!("{:.6e}", fit.rss),
        fit.n.to_string(),
    ]);
    table.write(format, out)?;
    Ok(())
}

fn cmd_pareto(catalog: &Catalog, segment: Segment, currency: Currency, format: OutputFormat, out: &mut impl Write) -> CmdResult {
    let scores: Vec<PlanScore> = catalog
        .segment(segment)
        .filter_map(|p| match &p.model {
            PlanModel::TwoPart(t) => {
                Some(PlanScore::new(&p.id, t.fixed_fee.convert(currency).to_f64(), t.marginal.convert(currency).to_f64()))
            }
            _ => None,
        })
        .collect::<Result<_, _>>()?;
    if scores.is_empty() {
        return Err(Failure::lookup(anyhow!("no two-part plans in the {segment} segment")));
    }
    let report = pareto_frontier(&scores)?;
    let by_id: BTreeMap<&str, &PlanScore> = scores.iter().map(|s| (s.plan_id.as_str(), s)).collect();
    let ordered = |ids: &mut dyn Iterator<Item = &String>| {
        let mut list: Vec<&PlanScore> = ids.map(|id| by_id[id.as_str()]).collect();
        list.sort_by(|a, b| a.f.total_cmp(&b.f).then(a.v.total_cmp(&b.v)).then(a.plan_id.cmp(&b.plan_id)));
        list
    };
    let mut table = Table::new(vec!["plan", "f", "v", "status", "dominated_by"]);
    for score in ordered(&mut report.frontier.iter()) {
        table.push(vec![score.plan_id.clone(), float(score.f), float(score.v), "frontier".into(), String::new()]);
    }
    for score in ordered(&mut report.dominated.keys()) {
        let dominators: Vec<String> =
            ordered(&mut report.dominated[&score.plan_id].iter()).iter().map(|s| s.plan_id.clone()).collect();
        table.push(vec![score.plan_id.clone(), float(score.f), float(score.v), "dominated".into(), dominators.join(";")]);
    }
    table.write(format, out)?;
    Ok(())
}

fn cmd_cheapest(
    plans: &[PricingPlan],
    grid: &SampleGrid,
    tie: &TieTolerance,
    currency: Currency,
    format: OutputFormat,
    out: &mut impl Write,
) -> CmdResult {
    let brackets = cheapest_coverage(plans, grid, tie, currency)?;
    let mut table = Table::new(vec!["from_gb", "to_gb", "winners"]);
    for b in brackets {
        let winners = match b.winners {
            Some(set) => set.into_iter().collect::<Vec<_>>().join(";"),
            None => "-".to_string(),
        };
        table.push(vec![b.from.to_string(), b.to.to_string(), winners]);
    }
    table.write(format, out)?;
    Ok(())
}

fn cmd_list(catalog: &Catalog, format: OutputFormat, out: &mut impl Write) -> CmdResult {
    let mut table = Table::new(vec!["id", "provider", "segment", "model", "currency", "max_gb", "pricing"]);
    for plan in &catalog.plans {
        let pricing = match plan.model {
            PlanModel::UnlimitedFlat(_) => "unlimited",
            PlanModel::CapacityOnly(_) => "capacity-only",
            _ => "priced",
        };
        let max = match (&plan.model, max_capacity(plan)) {
            (PlanModel::CapacityOnly(c), _) => c.caps.last().map(ToString::to_string).unwrap_or_else(|| "-".into()),
            (_, Some(max)) => max.to_string(),
            (_, None) => "-".into(),
        };
        table.push(vec![
            plan.id.clone(),
            plan.provider.clone(),
            plan.segment.to_string(),
            plan.model.keyword().to_string(),
            plan.currency.to_string(),
            max,
            pricing.to_string(),
        ]);
    }
    table.write(format, out)?;
    Ok(())
}

fn cmd_validate(cli: &Cli, out: &mut impl Write) -> CmdResult {
    let bytes = read_source(cli)?.unwrap_or_else(|| SHIPPED_CORPUS.as_bytes().to_vec());
    let diagnostics = match parse_catalog(&bytes) {
        Ok(parsed) => {
            let mut all = parsed.warnings;
            all.extend(validate(&parsed.catalog));
            all.sort_by_key(|d| d.line);
            all.dedup();
            all
        }
        Err(diagnostics) => diagnostics,
    };
    for d in &diagnostics {
        writeln!(out, "{d}").map_err(|e| Failure::from(anyhow!(e)))?;
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    let warnings = diagnostics.len() - errors;
    writeln!(out, "{errors} error(s), {warnings} warning(s)").map_err(|e| Failure::from(anyhow!(e)))?;
    if errors > 0 {
        return Err(Failure::domain(anyhow!("catalog is invalid")));
    }
    Ok(())
}
