//! Scenario text format.
//!
//! ```text
//! channeg-scenario 1
//! layout square
//! n_aps 4
//! clients_per_ap 1
//! area_side 100
//! seed 7
//! activity fixed 0.5            # or: activity uniform LOW HIGH
//! pruned true
//! radio.interference_radius_m 30  # optional radio.* overrides
//! nodes 8
//! 0 ap 25 25 0.5 1              # id kind x y activity provider|-
//! ...
//! end
//! ```
//!
//! Keys may appear in any order before `nodes`; unknown keys are rejected.
//! Floats are written in shortest round-trip form, so load(save(s)) == s.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{ActivityModel, Layout, Node, NodeKind, Point, ProviderId, Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::radio::RadioParams;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "channeg-scenario";

const CONFIG_KEYS: [&str; 7] = [
    "layout",
    "n_aps",
    "clients_per_ap",
    "area_side",
    "seed",
    "activity",
    "pruned",
];

/// A scenario plus the radio parameters stored alongside it, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDocument {
    pub scenario: Scenario,
    pub radio: Option<RadioParams>,
}

impl ScenarioDocument {
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let c = &s.config;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "layout {}", c.layout);
        let _ = writeln!(out, "n_aps {}", c.n_aps);
        let _ = writeln!(out, "clients_per_ap {}", c.clients_per_ap);
        let _ = writeln!(out, "area_side {}", c.area_side);
        let _ = writeln!(out, "seed {}", c.seed);
        match c.activity {
            ActivityModel::Fixed(a) => {
                let _ = writeln!(out, "activity fixed {a}");
            }
            ActivityModel::Uniform { low, high } => {
                let _ = writeln!(out, "activity uniform {low} {high}");
            }
        }
        let _ = writeln!(out, "pruned {}", s.pruned);
        if let Some(radio) = &self.radio {
            for (key, values) in radio_fields(radio) {
                let joined: Vec<String> = values.iter().map(f64::to_string).collect();
                let _ = writeln!(out, "radio.{key} {}", joined.join(" "));
            }
        }
        let _ = writeln!(out, "nodes {}", s.nodes.len());
        for n in &s.nodes {
            let kind = if n.is_ap() { "ap" } else { "wd" };
            let provider = n.provider.map_or_else(|| "-".to_string(), |p| p.number().to_string());
            let _ = writeln!(
                out,
                "{} {kind} {} {} {} {provider}",
                n.id, n.position.x, n.position.y, n.activity
            );
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, strip_comment(l).trim()))
            .filter(|(_, l)| !l.is_empty());

        let (line_no, header) = lines.next().ok_or_else(|| Error::parse(1, "empty scenario file"))?;
        let mut head = header.split_whitespace();
        if head.next() != Some(MAGIC) {
            return Err(Error::parse(line_no, format!("expected `{MAGIC} <version>` header")));
        }
        let version: u32 = parse_num(line_no, "version", head.next())?;
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }

        let mut fields: BTreeMap<&str, (usize, Vec<&str>)> = BTreeMap::new();
        let mut radio = None;
        let node_count = loop {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| Error::parse(line_no, "truncated file: missing `nodes` section"))?;
            let mut tokens = line.split_whitespace();
            let key = tokens.next().unwrap_or_default();
            let values: Vec<&str> = tokens.collect();
            if key == "nodes" {
                break parse_num::<usize>(line_no, "nodes", values.first().copied())?;
            }
            if let Some(radio_key) = key.strip_prefix("radio.") {
                let params = radio.get_or_insert_with(RadioParams::default);
                set_radio_field(params, radio_key, line_no, &values)?;
                continue;
            }
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::UnknownField(key.to_string()));
            }
            if fields.insert(key, (line_no, values)).is_some() {
                return Err(Error::parse(line_no, format!("duplicate field `{key}`")));
            }
        };

        let config = config_from_fields(&fields, line_no)?;
        let pruned = {
            let (l, v) = required(&fields, "pruned", line_no)?;
            match single(l, "pruned", v)? {
                "true" => true,
                "false" => false,
                other => return Err(Error::parse(l, format!("invalid boolean `{other}`"))),
            }
        };
        if let Some(r) = &radio {
            r.validate()?;
        }

        let mut nodes = Vec::with_capacity(node_count);
        let mut last_line = line_no;
        for expected_id in 0..node_count {
            let (l, line) = lines.next().ok_or_else(|| {
                Error::parse(
                    last_line,
                    format!("truncated file: {expected_id} of {node_count} nodes present"),
                )
            })?;
            last_line = l;
            nodes.push(parse_node(l, line, expected_id)?);
        }
        match lines.next() {
            Some((_, "end")) => {}
            Some((l, other)) => {
                return Err(Error::parse(l, format!("expected `end`, found `{other}`")));
            }
            None => return Err(Error::parse(last_line, "truncated file: missing `end`")),
        }
        if let Some((l, _)) = lines.next() {
            return Err(Error::parse(l, "content after `end`"));
        }
        if nodes.iter().skip_while(|n| n.is_ap()).any(Node::is_ap) {
            return Err(Error::parse(last_line, "access points must precede wireless devices"));
        }

        Ok(ScenarioDocument {
            scenario: Scenario { nodes, config, pruned },
            radio,
        })
    }
}

pub fn save_scenario(s: &Scenario) -> String {
    ScenarioDocument {
        scenario: s.clone(),
        radio: None,
    }
    .to_text()
}

pub fn load_scenario(text: &str) -> Result<Scenario> {
    ScenarioDocument::parse(text).map(|d| d.scenario)
}

pub fn load_scenario_document(text: &str) -> Result<ScenarioDocument> {
    ScenarioDocument::parse(text)
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(head, _)| head)
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, token: Option<&str>) -> Result<T> {
    let token = token.ok_or_else(|| Error::parse(line, format!("missing value for `{what}`")))?;
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid value `{token}` for `{what}`")))
}

fn required<'a, 'b>(
    fields: &'a BTreeMap<&str, (usize, Vec<&'b str>)>,
    key: &str,
    line: usize,
) -> Result<(usize, &'a [&'b str])> {
    fields
        .get(key)
        .map(|(l, v)| (*l, v.as_slice()))
        .ok_or_else(|| Error::parse(line, format!("missing field `{key}`")))
}

fn single<'a>(line: usize, key: &str, values: &[&'a str]) -> Result<&'a str> {
    match values {
        [v] => Ok(v),
        _ => Err(Error::parse(line, format!("`{key}` takes exactly one value"))),
    }
}

fn config_from_fields(fields: &BTreeMap<&str, (usize, Vec<&str>)>, line: usize) -> Result<ScenarioConfig> {
    let scalar = |key: &str| -> Result<(usize, &str)> {
        let (l, v) = required(fields, key, line)?;
        Ok((l, single(l, key, v)?))
    };
    let (l, v) = scalar("layout")?;
    let layout: Layout = v
        .parse()
        .map_err(|_| Error::parse(l, format!("invalid layout `{v}`")))?;
    let (l, v) = scalar("n_aps")?;
    let n_aps = parse_num(l, "n_aps", Some(v))?;
    let (l, v) = scalar("clients_per_ap")?;
    let clients_per_ap = parse_num(l, "clients_per_ap", Some(v))?;
    let (l, v) = scalar("area_side")?;
    let area_side = parse_num(l, "area_side", Some(v))?;
    let (l, v) = scalar("seed")?;
    let seed = parse_num(l, "seed", Some(v))?;

    let (l, v) = required(fields, "activity", line)?;
    let activity = match v {
        ["fixed", a] => ActivityModel::Fixed(parse_num(l, "activity", Some(a))?),
        ["uniform", lo, hi] => ActivityModel::Uniform {
            low: parse_num(l, "activity", Some(lo))?,
            high: parse_num(l, "activity", Some(hi))?,
        },
        _ => {
            return Err(Error::parse(
                l,
                "expected `activity fixed A` or `activity uniform LO HI`",
            ))
        }
    };

    let config = ScenarioConfig {
        layout,
        n_aps,
        clients_per_ap,
        area_side,
        seed,
        activity,
    };
    config.validate()?;
    Ok(config)
}

fn parse_node(line: usize, text: &str, expected_id: usize) -> Result<Node> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let [id, kind, x, y, activity, provider] = tokens[..] else {
        return Err(Error::parse(
            line,
            format!("node line needs 6 columns, found {}", tokens.len()),
        ));
    };
    let id: usize = parse_num(line, "id", Some(id))?;
    if id != expected_id {
        return Err(Error::parse(
            line,
            format!("expected node id {expected_id}, found {id}"),
        ));
    }
    let kind = match kind {
        "ap" => NodeKind::AccessPoint,
        "wd" => NodeKind::WirelessDevice,
        other => return Err(Error::parse(line, format!("unknown node kind `{other}`"))),
    };
    let position = Point::new(parse_num(line, "x", Some(x))?, parse_num(line, "y", Some(y))?);
    let activity: f64 = parse_num(line, "activity", Some(activity))?;
    if !(0.0..=1.0).contains(&activity) {
        return Err(Error::parse(line, format!("activity {activity} outside [0, 1]")));
    }
    let provider = match provider {
        "-" => None,
        p => Some(
            ProviderId::new(parse_num(line, "provider", Some(p))?).map_err(|e| Error::parse(line, e.to_string()))?,
        ),
    };
    if provider.is_some() && kind != NodeKind::AccessPoint {
        return Err(Error::parse(line, "only access points carry a provider"));
    }
    Ok(Node {
        id,
        kind,
        position,
        activity,
        provider,
    })
}

fn radio_fields(r: &RadioParams) -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("tx_power_dbm", vec![r.tx_power_dbm]),
        ("ref_loss_db", vec![r.ref_loss_db]),
        ("path_loss_exponent", vec![r.path_loss_exponent]),
        ("noise_floor_dbm", vec![r.noise_floor_dbm]),
        ("sinr_min_db", vec![r.sinr_min_db]),
        ("sinr_max_db", vec![r.sinr_max_db]),
        ("cochannel_table", r.cochannel_table.to_vec()),
        ("interference_radius_m", vec![r.interference_radius_m]),
    ]
}

fn set_radio_field(r: &mut RadioParams, key: &str, line: usize, values: &[&str]) -> Result<()> {
    let nums: Vec<f64> = values
        .iter()
        .map(|v| parse_num(line, key, Some(v)))
        .collect::<Result<_>>()?;
    let scalar = || match nums[..] {
        [v] => Ok(v),
        _ => Err(Error::parse(line, format!("`radio.{key}` takes exactly one value"))),
    };
    match key {
        "tx_power_dbm" => r.tx_power_dbm = scalar()?,
        "ref_loss_db" => r.ref_loss_db = scalar()?,
        "path_loss_exponent" => r.path_loss_exponent = scalar()?,
        "noise_floor_dbm" => r.noise_floor_dbm = scalar()?,
        "sinr_min_db" => r.sinr_min_db = scalar()?,
        "sinr_max_db" => r.sinr_max_db = scalar()?,
        "interference_radius_m" => r.interference_radius_m = scalar()?,
        "cochannel_table" => {
            r.cochannel_table = nums
                .as_slice()
                .try_into()
                .map_err(|_| Error::parse(line, "`radio.cochannel_table` takes exactly five values"))?;
        }
        other => return Err(Error::UnknownField(format!("radio.{other}"))),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{assign_providers, generate_scenario, prune_isolated};
    use proptest::prelude::*;

    fn sample() -> Scenario {
        let s = generate_scenario(&ScenarioConfig::new(Layout::Random, 8, 3, 17)).unwrap();
        assign_providers(&prune_isolated(&s, 30.0), 4)
    }

    #[test]
    fn round_trip_with_radio() {
        let doc = ScenarioDocument {
            scenario: sample(),
            radio: Some(RadioParams {
                interference_radius_m: 27.5,
                ..RadioParams::default()
            }),
        };
        let text = doc.to_text();
        assert_eq!(ScenarioDocument::parse(&text).unwrap(), doc);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = save_scenario(&sample());
        let cut = &text[..text.len() / 2];
        let cut = &cut[..cut.rfind('\n').unwrap()];
        assert!(matches!(load_scenario(cut), Err(Error::Parse { .. })));
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(matches!(load_scenario(no_end), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_field_named() {
        let text = save_scenario(&sample()).replacen("seed", "colour blue\nseed", 1);
        match load_scenario(&text) {
            Err(Error::UnknownField(f)) => assert_eq!(f, "colour"),
            other => panic!("expected unknown field error, got {other:?}"),
        }
        let text = save_scenario(&sample()).replacen("seed", "radio.gain 3\nseed", 1);
        assert!(matches!(load_scenario(&text), Err(Error::UnknownField(f)) if f == "radio.gain"));
    }

    #[test]
    fn version_mismatch() {
        let text = save_scenario(&sample()).replacen("channeg-scenario 1", "channeg-scenario 2", 1);
        assert!(matches!(
            load_scenario(&text),
            Err(Error::VersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn bad_node_lines() {
        let good = save_scenario(&sample());
        let bad_kind = good.replacen(" ap ", " router ", 1);
        assert!(load_scenario(&bad_kind).is_err());
        let bad_id = good.replacen("\n0 ap", "\n5 ap", 1);
        assert!(load_scenario(&bad_id).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn generated_scenarios_round_trip(
            seed in any::<u64>(),
            n_aps in 1usize..20,
            cpa in 1usize..6,
            square in any::<bool>(),
            uniform in any::<bool>(),
        ) {
            let layout = if square { Layout::Square } else { Layout::Random };
            let mut cfg = ScenarioConfig::new(layout, n_aps, cpa, seed);
            if uniform {
                cfg.activity = ActivityModel::Uniform { low: 0.1, high: 0.7 };
            }
            let s = generate_scenario(&cfg).unwrap();
            prop_assert_eq!(&load_scenario(&save_scenario(&s)).unwrap(), &s);
            let p = assign_providers(&prune_isolated(&s, 30.0), seed ^ 1);
            prop_assert_eq!(&load_scenario(&save_scenario(&p)).unwrap(), &p);
        }
    }
}
