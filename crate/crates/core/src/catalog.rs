//! Plan catalog: a line-oriented text format, its parser and validator.
//!
//! ```text
//! # comment
//! [plan dropbox-consumer]
//! provider=Dropbox
//! segment=consumer
//! currency=USD
//! model=bundle
//! free_gb=2
//! tier=50 9.99 monthly
//! tier=100 19.99 monthly
//! note=free text, repeatable
//! ```
//!
//! Comments take a whole line. Values are trimmed. Numbers are plain
//! decimals with `.` as separator. Unknown keys and keys that do not apply to
//! the declared model are warnings; malformed values and broken plan
//! invariants are errors. A bundle whose tiers carry no fee is kept as a
//! capacity-only plan and never priced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use num_rational::BigRational;
use thiserror::Error;

use crate::decimal::{format_exact, parse_decimal};
use crate::tariff::{
    BillingPeriod, BlockRateTariff, Bracket, BundlePlan, BundleTier, CapacityGB, CapacityOnlyPlan, Currency, Money,
    PerSeatPlan, PlanModel, PricingPlan, Segment, TwoPartTariff, UnlimitedFlat,
};

pub use crate::tariff::Severity;

/// The plan corpus shipped with the crate.
pub const SHIPPED_CORPUS: &str = include_str!("../data/corpus.catalog");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub plan_id: Option<String>,
    pub message: String,
    /// 1-based source line; 0 when the diagnostic concerns the whole input.
    pub line: usize,
}

impl Diagnostic {
    fn new(severity: Severity, plan_id: Option<&str>, line: usize, message: impl Into<String>) -> Self {
        Diagnostic { severity, plan_id: plan_id.map(str::to_string), message: message.into(), line }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.severity)?;
        if let Some(id) = &self.plan_id {
            write!(f, " [{id}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("plan {plan}: {value} has no exact decimal form")]
    NotDecimal { plan: String, value: String },
}

/// A set of plans with their source notes, keyed by plan id.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub plans: Vec<PricingPlan>,
    pub source_notes: BTreeMap<String, Vec<String>>,
    origins: BTreeMap<String, usize>,
}

impl PartialEq for Catalog {
    fn eq(&self, other: &Self) -> bool {
        self.plans == other.plans && self.source_notes == other.source_notes
    }
}

impl Catalog {
    pub fn new(plans: Vec<PricingPlan>, source_notes: BTreeMap<String, Vec<String>>) -> Self {
        Catalog { plans, source_notes, origins: BTreeMap::new() }
    }

    /// The shipped corpus, parsed.
    ///
    /// # Panics
    /// If the shipped corpus does not parse, which its tests rule out.
    pub fn shipped() -> Catalog {
        match parse_catalog(SHIPPED_CORPUS.as_bytes()) {
            Ok(parsed) => parsed.catalog,
            Err(diagnostics) => panic!("shipped corpus is invalid: {:?}", diagnostics),
        }
    }

    pub fn get(&self, id: &str) -> Option<&PricingPlan> {
        self.plans.iter().find(|p| p.id == id)
    }

    pub fn notes(&self, id: &str) -> &[String] {
        self.source_notes.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn segment(&self, segment: Segment) -> impl Iterator<Item = &PricingPlan> {
        self.plans.iter().filter(move |p| p.segment == segment)
    }

    /// Header line of a plan in the text it was parsed from.
    pub fn line_of(&self, id: &str) -> Option<usize> {
        self.origins.get(id).copied()
    }

    /// Renders the catalog in the text format; parsing the result gives back
    /// an equal catalog.
    pub fn to_text(&self) -> Result<String, CatalogError> {
        let mut out = String::new();
        for (index, plan) in self.plans.iter().enumerate() {
            if index > 0 {
                out.push('\n');
            }
            write_plan(&mut out, plan, self.notes(&plan.id))?;
        }
        Ok(out)
    }
}

fn number(plan: &PricingPlan, value: &BigRational) -> Result<String, CatalogError> {
    format_exact(value).ok_or_else(|| CatalogError::NotDecimal { plan: plan.id.clone(), value: value.to_string() })
}

fn write_plan(out: &mut String, plan: &PricingPlan, notes: &[String]) -> Result<(), CatalogError> {
    let n = |value: &BigRational| number(plan, value);
    // writing to a String cannot fail
    let _ = writeln!(out, "[plan {}]", plan.id);
    let _ = writeln!(out, "provider={}", plan.provider);
    let _ = writeln!(out, "name={}", plan.plan_name);
    let _ = writeln!(out, "segment={}", plan.segment.keyword());
    let _ = writeln!(out, "currency={}", plan.currency.code());
    let _ = writeln!(out, "model={}", plan.model.keyword());
    match &plan.model {
        PlanModel::Bundle(b) => {
            let _ = writeln!(out, "free_gb={}", n(b.free_gb.gb())?);
            for t in &b.tiers {
                let _ = writeln!(out, "tier={} {} {}", n(t.cap.gb())?, n(t.fee.amount())?, t.period.keyword());
            }
        }
        PlanModel::CapacityOnly(c) => {
            let _ = writeln!(out, "free_gb={}", n(c.free_gb.gb())?);
            for cap in &c.caps {
                let _ = writeln!(out, "tier={}", n(cap.gb())?);
            }
        }
        PlanModel::BlockRate(b) => {
            let _ = writeln!(out, "declining={}", b.declining);
            for br in &b.brackets {
                let _ = writeln!(out, "bracket={} {}", n(br.upper.gb())?, n(br.marginal.amount())?);
            }
        }
        PlanModel::TwoPart(t) => {
            let _ = writeln!(out, "f={}", n(t.fixed_fee.amount())?);
            let _ = writeln!(out, "v={}", n(t.marginal.amount())?);
        }
        PlanModel::PerSeat(p) => {
            let _ = writeln!(out, "base_users={}", p.base_users);
            let _ = writeln!(out, "base_fee_yearly={}", n(p.base_fee_yearly.amount())?);
            let _ = writeln!(out, "per_user_fee_yearly={}", n(p.per_user_fee_yearly.amount())?);
            let _ = writeln!(out, "gb_per_user={}", n(p.gb_per_user.gb())?);
            if let Some(base) = &p.base_capacity {
                let _ = writeln!(out, "base_gb={}", n(base.gb())?);
            }
        }
        PlanModel::UnlimitedFlat(u) => {
            let _ = writeln!(out, "fee={} {}", n(u.fee.amount())?, u.period.keyword());
        }
    }
    for note in notes {
        let _ = writeln!(out, "note={note}");
    }
    Ok(())
}

/// A successfully parsed catalog together with its warnings.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub catalog: Catalog,
    pub warnings: Vec<Diagnostic>,
}

const KNOWN_KEYS: &[&str] = &[
    "provider",
    "name",
    "segment",
    "currency",
    "model",
    "free_gb",
    "tier",
    "bracket",
    "declining",
    "f",
    "v",
    "base_users",
    "base_fee_yearly",
    "per_user_fee_yearly",
    "gb_per_user",
    "base_gb",
    "fee",
    "note",
];

const REPEATABLE_KEYS: &[&str] = &["tier", "bracket", "note"];

fn model_keys(model: &str) -> &'static [&'static str] {
    match model {
        "bundle" => &["free_gb", "tier"],
        "block_rate" => &["bracket", "declining"],
        "two_part" => &["f", "v"],
        "per_seat" => &["base_users", "base_fee_yearly", "per_user_fee_yearly", "gb_per_user", "base_gb"],
        "unlimited_flat" => &["fee"],
        _ => &[],
    }
}

struct Field {
    key: String,
    value: String,
    line: usize,
}

struct Stanza {
    id: String,
    line: usize,
    fields: Vec<Field>,
}

/// Collects diagnostics for one stanza while it is being built.
struct StanzaContext<'a> {
    stanza: &'a Stanza,
    diagnostics: &'a mut Vec<Diagnostic>,
}

impl<'a> StanzaContext<'a> {
    fn error(&mut self, line: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(Severity::Error, Some(&self.stanza.id), line, message));
    }

    fn warning(&mut self, line: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic::new(Severity::Warning, Some(&self.stanza.id), line, message));
    }

    fn single(&self, key: &str) -> Option<(&'a str, usize)> {
        let stanza: &'a Stanza = self.stanza;
        stanza.fields.iter().find(|f| f.key == key).map(|f| (f.value.as_str(), f.line))
    }

    fn required(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let found = self.single(key);
        if found.is_none() {
            let line = self.stanza.line;
            self.error(line, format!("missing required key `{key}`"));
        }
        found
    }

    fn all(&self, key: &str) -> Vec<(&'a str, usize)> {
        let stanza: &'a Stanza = self.stanza;
        stanza.fields.iter().filter(|f| f.key == key).map(|f| (f.value.as_str(), f.line)).collect()
    }

    fn parsed<T>(&mut self, value: &str, line: usize, what: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        match parse(value) {
            Ok(v) => Some(v),
            Err(e) => {
                self.error(line, format!("malformed {what}: {e}"));
                None
            }
        }
    }
}

fn amount(text: &str) -> Result<BigRational, String> {
    let value = parse_decimal(text).map_err(|e| e.to_string())?;
    if value < BigRational::from_integer(0.into()) {
        return Err(format!("negative amount {text}"));
    }
    Ok(value)
}

fn capacity(text: &str) -> Result<CapacityGB, String> {
    CapacityGB::new(amount(text)?).map_err(|e| e.to_string())
}

fn money(text: &str, currency: Currency) -> Result<Money, String> {
    Money::new(amount(text)?, currency).map_err(|e| e.to_string())
}

fn split_fields(text: &str, expected: usize, shape: &str) -> Result<Vec<String>, String> {
    let parts: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if parts.len() != expected {
        return Err(format!("expected `{shape}`, got {text:?}"));
    }
    Ok(parts)
}

fn build_plan(stanza: &Stanza, diagnostics: &mut Vec<Diagnostic>) -> Option<(PricingPlan, Vec<String>)> {
    let mut cx = StanzaContext { stanza, diagnostics };
    let errors_before = cx.diagnostics.iter().filter(|d| d.is_error()).count();

    let mut seen = BTreeSet::new();
    for field in &stanza.fields {
        if !KNOWN_KEYS.contains(&field.key.as_str()) {
            cx.warning(field.line, format!("unknown key `{}` ignored", field.key));
        } else if !REPEATABLE_KEYS.contains(&field.key.as_str()) && !seen.insert(field.key.as_str()) {
            cx.error(field.line, format!("duplicate key `{}`", field.key));
        }
    }

    let provider = cx.required("provider").map(|(v, _)| v.to_string());
    let plan_name = cx.single("name").map(|(v, _)| v.to_string()).unwrap_or_else(|| stanza.id.clone());
    let segment = match cx.required("segment") {
        Some((v, line)) => cx.parsed(v, line, "segment", |s| s.parse::<Segment>()),
        None => None,
    };
    let currency = match cx.required("currency") {
        Some((v, line)) => cx.parsed(v, line, "currency", |s| s.parse::<Currency>()),
        None => None,
    };
    let model_kw = cx.required("model").map(|(v, line)| (v.to_string(), line));

    let model_kw = match model_kw {
        Some((kw, line)) if model_keys(&kw).is_empty() => {
            cx.error(line, format!("unknown model `{kw}`"));
            None
        }
        other => other.map(|(kw, _)| kw),
    };

    let model_specific: BTreeSet<&str> = ["bundle", "block_rate", "two_part", "per_seat", "unlimited_flat"]
        .iter()
        .flat_map(|m| model_keys(m).iter().copied())
        .collect();
    if let Some(kw) = &model_kw {
        for field in &stanza.fields {
            if model_specific.contains(field.key.as_str()) && !model_keys(kw).contains(&field.key.as_str()) {
                cx.warning(field.line, format!("key `{}` does not apply to model {kw}; ignored", field.key));
            }
        }
    }

    let model = match (model_kw.as_deref(), currency) {
        (Some(kw), Some(currency)) => build_model(&mut cx, kw, currency),
        _ => None,
    };
    let notes: Vec<String> = cx.all("note").into_iter().map(|(v, _)| v.to_string()).collect();

    let errors_after = cx.diagnostics.iter().filter(|d| d.is_error()).count();
    let plan = PricingPlan {
        id: stanza.id.clone(),
        provider: provider?,
        plan_name,
        segment: segment?,
        currency: currency?,
        model: model?,
    };
    if let PlanModel::CapacityOnly(_) = plan.model {
        cx.warning(stanza.line, "no published fees; plan is capacity-only and excluded from pricing");
    }
    for issue in plan.issues() {
        cx.diagnostics.push(Diagnostic::new(issue.severity, Some(&plan.id), stanza.line, issue.message));
    }
    (errors_after == errors_before).then_some((plan, notes))
}

fn build_model(cx: &mut StanzaContext<'_>, kw: &str, currency: Currency) -> Option<PlanModel> {
    let header = cx.stanza.line;
    match kw {
        "bundle" => {
            let free_gb = match cx.single("free_gb") {
                Some((v, line)) => cx.parsed(v, line, "free_gb", capacity)?,
                None => CapacityGB::zero(),
            };
            let mut priced = Vec::new();
            let mut caps = Vec::new();
            let mut ok = true;
            for (value, line) in cx.all("tier") {
                let parts: Vec<&str> = value.split_whitespace().collect();
                match parts.as_slice() {
                    [cap] => match cx.parsed(cap, line, "tier capacity", capacity) {
                        Some(cap) => caps.push(cap),
                        None => ok = false,
                    },
                    [cap, fee, period] => {
                        let cap = cx.parsed(cap, line, "tier capacity", capacity);
                        let fee = cx.parsed(fee, line, "tier fee", |s| money(s, currency));
                        let period = cx.parsed(period, line, "billing period", |s| s.parse::<BillingPeriod>());
                        match (cap, fee, period) {
                            (Some(cap), Some(fee), Some(period)) => {
                                caps.push(cap.clone());
                                priced.push(BundleTier { cap, fee, period });
                            }
                            _ => ok = false,
                        }
                    }
                    _ => {
                        cx.error(line, format!("malformed tier: expected `<cap_gb> <fee> <monthly|yearly>`, got {value:?}"));
                        ok = false;
                    }
                }
            }
            if !ok {
                return None;
            }
            if !priced.is_empty() && priced.len() == caps.len() {
                Some(PlanModel::Bundle(BundlePlan { free_gb, tiers: priced }))
            } else if priced.is_empty() {
                Some(PlanModel::CapacityOnly(CapacityOnlyPlan { free_gb, caps }))
            } else {
                cx.error(header, "bundle mixes priced and unpriced tiers");
                None
            }
        }
        "block_rate" => {
            let declining = match cx.single("declining") {
                Some((v, line)) => cx.parsed(v, line, "declining flag", |s| match s {
                    "true" => Ok(true),
                    "false" => Ok(false),
                    _ => Err(format!("expected true or false, got {s:?}")),
                })?,
                None => false,
            };
            let mut brackets = Vec::new();
            let mut ok = true;
            for (value, line) in cx.all("bracket") {
                let parsed = cx.parsed(value, line, "bracket", |s| {
                    let parts = split_fields(s, 2, "<upper_gb> <price_per_gb_month>")?;
                    Ok(Bracket { upper: capacity(&parts[0])?, marginal: money(&parts[1], currency)? })
                });
                match parsed {
                    Some(b) => brackets.push(b),
                    None => ok = false,
                }
            }
            ok.then_some(PlanModel::BlockRate(BlockRateTariff { brackets, declining }))
        }
        "two_part" => {
            let f = cx.required("f").map(|(v, l)| (v.to_string(), l));
            let v = cx.required("v").map(|(v, l)| (v.to_string(), l));
            let (f, v) = (f?, v?);
            let fixed_fee = cx.parsed(&f.0, f.1, "f", |s| money(s, currency));
            let marginal = cx.parsed(&v.0, v.1, "v", |s| money(s, currency));
            Some(PlanModel::TwoPart(TwoPartTariff { fixed_fee: fixed_fee?, marginal: marginal? }))
        }
        "per_seat" => {
            let mut text = |key: &str| cx.required(key).map(|(v, l)| (v.to_string(), l));
            let users = text("base_users");
            let base_fee = text("base_fee_yearly");
            let per_user = text("per_user_fee_yearly");
            let gb_per_user = text("gb_per_user");
            let base_gb = cx.single("base_gb").map(|(v, l)| (v.to_string(), l));
            let (users, base_fee, per_user, gb_per_user) = (users?, base_fee?, per_user?, gb_per_user?);
            let base_users = cx.parsed(&users.0, users.1, "base_users", |s| s.parse::<u32>().map_err(|e| e.to_string()));
            let base_fee_yearly = cx.parsed(&base_fee.0, base_fee.1, "base_fee_yearly", |s| money(s, currency));
            let per_user_fee_yearly = cx.parsed(&per_user.0, per_user.1, "per_user_fee_yearly", |s| money(s, currency));
            let gb_per_user = cx.parsed(&gb_per_user.0, gb_per_user.1, "gb_per_user", capacity);
            let base_capacity = match base_gb {
                Some((v, line)) => Some(cx.parsed(&v, line, "base_gb", capacity)?),
                None => None,
            };
            Some(PlanModel::PerSeat(PerSeatPlan {
                base_users: base_users?,
                base_fee_yearly: base_fee_yearly?,
                per_user_fee_yearly: per_user_fee_yearly?,
                gb_per_user: gb_per_user?,
                base_capacity,
            }))
        }
        "unlimited_flat" => {
            let (value, line) = cx.required("fee").map(|(v, l)| (v.to_string(), l))?;
            cx.parsed(&value, line, "fee", |s| {
                let parts = split_fields(s, 2, "<fee> <monthly|yearly>")?;
                Ok(PlanModel::UnlimitedFlat(UnlimitedFlat { fee: money(&parts[0], currency)?, period: parts[1].parse()? }))
            })
        }
        _ => None,
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Parses catalog text. Succeeds iff no error diagnostics were raised;
/// otherwise returns every diagnostic, warnings included.
pub fn parse_catalog(input: &[u8]) -> Result<Parsed, Vec<Diagnostic>> {
    let text = match std::str::from_utf8(input) {
        Ok(text) => text,
        Err(e) => {
            let line = input[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            return Err(vec![Diagnostic::new(Severity::Error, None, line, "input is not valid UTF-8")]);
        }
    };

    let mut diagnostics = Vec::new();
    let mut stanzas: Vec<Stanza> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(inner) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let words: Vec<&str> = inner.split_whitespace().collect();
            match words.as_slice() {
                ["plan", id] if valid_id(id) => stanzas.push(Stanza { id: id.to_string(), line, fields: Vec::new() }),
                _ => diagnostics.push(Diagnostic::new(
                    Severity::Error,
                    None,
                    line,
                    format!("malformed stanza header {trimmed:?}; expected `[plan <id>]`"),
                )),
            }
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            diagnostics.push(Diagnostic::new(Severity::Error, None, line, format!("expected `key=value`, got {trimmed:?}")));
            continue;
        };
        match stanzas.last_mut() {
            Some(stanza) => stanza.fields.push(Field { key: key.trim().to_string(), value: value.trim().to_string(), line }),
            None => diagnostics.push(Diagnostic::new(Severity::Error, None, line, "key outside of a plan stanza")),
        }
    }

    let mut catalog = Catalog::default();
    let mut ids = BTreeSet::new();
    for stanza in &stanzas {
        if !ids.insert(stanza.id.clone()) {
            diagnostics.push(Diagnostic::new(Severity::Error, Some(&stanza.id), stanza.line, "duplicate plan id"));
            continue;
        }
        if let Some((plan, notes)) = build_plan(stanza, &mut diagnostics) {
            catalog.origins.insert(plan.id.clone(), stanza.line);
            if !notes.is_empty() {
                catalog.source_notes.insert(plan.id.clone(), notes);
            }
            catalog.plans.push(plan);
        }
    }
    if stanzas.is_empty() {
        diagnostics.push(Diagnostic::new(Severity::Warning, None, 0, "catalog contains no plans"));
    }

    diagnostics.sort_by_key(|d| d.line);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(diagnostics);
    }
    Ok(Parsed { catalog, warnings: diagnostics })
}

/// Re-checks every plan invariant and id uniqueness. Running it twice gives
/// the same diagnostics.
pub fn validate(catalog: &Catalog) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let mut ids = BTreeSet::new();
    for plan in &catalog.plans {
        let line = catalog.line_of(&plan.id).unwrap_or(0);
        if !ids.insert(plan.id.as_str()) {
            diagnostics.push(Diagnostic::new(Severity::Error, Some(&plan.id), line, "duplicate plan id"));
        }
        if let PlanModel::CapacityOnly(_) = plan.model {
            diagnostics.push(Diagnostic::new(
                Severity::Warning,
                Some(&plan.id),
                line,
                "no published fees; plan is capacity-only and excluded from pricing",
            ));
        }
        for issue in plan.issues() {
            diagnostics.push(Diagnostic::new(issue.severity, Some(&plan.id), line, issue.message));
        }
    }
    diagnostics
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(diagnostics: &[Diagnostic]) -> Vec<&Diagnostic> {
        diagnostics.iter().filter(|d| d.is_error()).collect()
    }

    const DROPBOX: &str = "\
# consumer bundle
[plan dropbox-consumer]
provider=Dropbox
segment=consumer
currency=USD
model=bundle
free_gb=2
tier=50 9.99 monthly
tier=100 19.99 monthly
note=Pro50 and Pro100
";

    #[test]
    fn parses_a_bundle() {
        let parsed = parse_catalog(DROPBOX.as_bytes()).unwrap();
        assert!(parsed.warnings.is_empty(), "{:?}", parsed.warnings);
        let plan = parsed.catalog.get("dropbox-consumer").unwrap();
        assert_eq!(plan.provider, "Dropbox");
        assert_eq!(plan.plan_name, "dropbox-consumer");
        let PlanModel::Bundle(bundle) = &plan.model else { panic!("not a bundle") };
        assert_eq!(bundle.tiers.len(), 2);
        assert_eq!(parsed.catalog.notes("dropbox-consumer"), ["Pro50 and Pro100".to_string()]);
        assert_eq!(parsed.catalog.line_of("dropbox-consumer"), Some(2));
    }

    #[test]
    fn decreasing_tiers_are_an_error() {
        let text = DROPBOX.replace("tier=50 9.99", "tier=150 9.99");
        let diagnostics = parse_catalog(text.as_bytes()).unwrap_err();
        let errs = errors(&diagnostics);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].message, "tiers not strictly increasing");
        assert_eq!(errs[0].plan_id.as_deref(), Some("dropbox-consumer"));
        assert_eq!(errs[0].line, 2);
    }

    #[test]
    fn empty_input_gives_empty_catalog_and_one_warning() {
        let parsed = parse_catalog(b"").unwrap();
        assert!(parsed.catalog.plans.is_empty());
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].severity, Severity::Warning);
        let parsed = parse_catalog(b"# only a comment\n\n").unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn unknown_keys_warn_and_bad_values_fail() {
        let text = DROPBOX.replace("note=", "colour=blue\nnote=");
        let parsed = parse_catalog(text.as_bytes()).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].line, 10);

        let text = DROPBOX.replace("9.99 monthly", "9,99 monthly");
        let diagnostics = parse_catalog(text.as_bytes()).unwrap_err();
        assert_eq!(errors(&diagnostics)[0].line, 8);

        let text = DROPBOX.replace("19.99 monthly", "19.99 weekly");
        assert!(parse_catalog(text.as_bytes()).is_err());

        let text = DROPBOX.replace("f=", "").replace("free_gb=2", "free_gb=2\nf=3");
        let parsed = parse_catalog(text.as_bytes()).unwrap();
        assert!(parsed.warnings[0].message.contains("does not apply"));
    }

    #[test]
    fn structural_errors() {
        assert!(parse_catalog(b"provider=X\n").is_err());
        assert!(parse_catalog(b"[plan]\n").is_err());
        assert!(parse_catalog(b"[plan a b]\n").is_err());
        assert!(parse_catalog(b"[plan a]\nnot a pair\n").is_err());
        let dup = format!("{DROPBOX}\n{DROPBOX}");
        let diagnostics = parse_catalog(dup.as_bytes()).unwrap_err();
        assert!(diagnostics.iter().any(|d| d.message == "duplicate plan id"));
        let missing = DROPBOX.replace("segment=consumer\n", "");
        assert!(parse_catalog(missing.as_bytes()).unwrap_err()[0].message.contains("segment"));
        let twice = DROPBOX.replace("currency=USD\n", "currency=USD\ncurrency=EUR\n");
        assert!(parse_catalog(twice.as_bytes()).is_err());
        assert!(parse_catalog(&[0x5b, 0xff, 0xfe]).is_err());
    }

    #[test]
    fn raw_amazon_breakpoints_are_rejected() {
        let text = "\
[plan amazon-raw]
provider=Amazon
segment=business
currency=USD
model=block_rate
declining=true
bracket=1000 0.125
bracket=50000 0.110
bracket=500000 0.095
bracket=100000 0.090
bracket=5000000 0.080
bracket=10000000 0.055
";
        let diagnostics = parse_catalog(text.as_bytes()).unwrap_err();
        assert_eq!(errors(&diagnostics)[0].message, "breakpoints not strictly increasing");
    }

    #[test]
    fn per_seat_capacity_mismatch_warns() {
        let text = "\
[plan teams]
provider=Dropbox
segment=business
currency=USD
model=per_seat
base_users=5
base_fee_yearly=795
per_user_fee_yearly=125
gb_per_user=200
base_gb=1200
";
        let parsed = parse_catalog(text.as_bytes()).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(parsed.warnings[0].message.contains("base capacity"));
        let text = text.replace("base_gb=1200", "base_gb=1000");
        assert!(parse_catalog(text.as_bytes()).unwrap().warnings.is_empty());
    }

    #[test]
    fn fee_less_bundles_become_capacity_only() {
        let text = "\
[plan carbonite-business]
provider=Carbonite
segment=business
currency=USD
model=bundle
tier=250
tier=500
";
        let parsed = parse_catalog(text.as_bytes()).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert!(matches!(parsed.catalog.plans[0].model, PlanModel::CapacityOnly(_)));
        let mixed = text.replace("tier=500", "tier=500 9 monthly");
        assert!(parse_catalog(mixed.as_bytes()).is_err());
    }

    #[test]
    fn validate_is_idempotent_and_catches_programmatic_damage() {
        let mut catalog = parse_catalog(DROPBOX.as_bytes()).unwrap().catalog;
        assert!(validate(&catalog).is_empty());
        if let PlanModel::Bundle(b) = &mut catalog.plans[0].model {
            b.tiers.reverse();
        }
        let first = validate(&catalog);
        assert_eq!(first, validate(&catalog));
        assert!(first.iter().any(|d| d.message == "tiers not strictly increasing"));
    }

    #[test]
    fn round_trips_through_text() {
        let catalog = Catalog::shipped();
        let text = catalog.to_text().unwrap();
        assert_eq!(parse_catalog(text.as_bytes()).unwrap().catalog, catalog);
    }
}
