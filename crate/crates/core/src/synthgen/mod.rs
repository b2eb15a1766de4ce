//! Deterministic generator of labelled CIDDS-001-format traffic.
//!
//! Benign flows follow a diurnal rate profile (working-hours peak); attack
//! flows follow per-type signatures; labels come from the same rules the
//! dataset's two environments use: schedule-window matching for the emulated
//! internal network and origin/port rules for the external server. The same
//! seed always yields byte-identical output.

mod signatures;

use chrono::NaiveDateTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::flow::{AttackTypeLabel, ClassLabel, RawFlow};
use crate::ingest::{parse_timestamp, render_timestamp, FlowWriter, IngestError};
use crate::kv::{bad_value, KvError, KvFile};

pub use signatures::attack_signature;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("bad scenario config: {0}")]
    BadConfig(String),
    #[error("schedule entry {index}: {reason}")]
    Schedule { index: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Hosts taking part in a scenario. The external server is optional: without
/// it the scenario is pure internal-network traffic.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct HostInventory {
    pub clients: Vec<String>,
    pub servers: Vec<String>,
    pub external_server: Option<String>,
    pub external_clients: Vec<String>,
    pub attackers: Vec<String>,
}

impl HostInventory {
    pub fn is_internal(&self, ip: &str) -> bool {
        self.clients.iter().any(|h| h == ip) || self.servers.iter().any(|h| h == ip)
    }

    pub fn is_attacker(&self, ip: &str) -> bool {
        self.attackers.iter().any(|h| h == ip)
    }

    fn knows(&self, ip: &str) -> bool {
        self.is_internal(ip)
            || self.is_attacker(ip)
            || self.external_server.as_deref() == Some(ip)
    }
}

/// One scheduled attack: `intensity` attacker-side flows between `start` and
/// `start + duration`, plus the signature's reply flows from the victim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackEntry {
    pub attack_type: AttackTypeLabel,
    pub start: NaiveDateTime,
    pub duration_secs: u32,
    pub attacker: String,
    pub victim: String,
    pub intensity: u32,
}

impl AttackEntry {
    pub fn end(&self) -> NaiveDateTime {
        self.start + chrono::Duration::seconds(self.duration_secs as i64)
    }

    pub fn window_contains(&self, time: NaiveDateTime) -> bool {
        self.start <= time && time <= self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub start: NaiveDateTime,
    pub duration_secs: u32,
    /// Benign flows per second at the working-hours peak.
    pub benign_rate: f64,
    pub hosts: HostInventory,
    pub schedule: Vec<AttackEntry>,
}

const SCENARIO_KEYS: [&str; 10] = [
    "seed",
    "start",
    "duration",
    "benign_rate",
    "clients",
    "servers",
    "external_server",
    "external_clients",
    "attackers",
    "attack",
];

fn parse_host_list(kv: &KvFile, key: &str) -> Vec<String> {
    kv.get(key)
        .map(|raw| {
            raw.split(',')
                .map(|h| h.trim().to_string())
                .filter(|h| !h.is_empty())
                .collect()
        })
        .unwrap_or_default()
}

fn parse_attack_type_token(token: &str) -> Option<AttackTypeLabel> {
    match token {
        "ping_scan" => Some(AttackTypeLabel::PingScan),
        "port_scan" => Some(AttackTypeLabel::PortScan),
        "dos" => Some(AttackTypeLabel::Dos),
        "brute_force" => Some(AttackTypeLabel::BruteForce),
        _ => None,
    }
}

impl ScenarioConfig {
    pub fn from_text(text: &str) -> Result<ScenarioConfig, ScenarioError> {
        let kv = KvFile::parse(text)?;
        Self::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvFile) -> Result<ScenarioConfig, ScenarioError> {
        kv.check_keys(&SCENARIO_KEYS)?;
        let start = parse_timestamp(kv.require("start")?)
            .map_err(|e| bad_value("start", e))?;
        let duration_secs = kv
            .parse_value::<u32>("duration")?
            .ok_or_else(|| KvError::MissingKey("duration".into()))?;
        let benign_rate = kv.parse_value::<f64>("benign_rate")?.unwrap_or(1.0);
        let hosts = HostInventory {
            clients: parse_host_list(kv, "clients"),
            servers: parse_host_list(kv, "servers"),
            external_server: kv.get("external_server").map(|s| s.to_string()),
            external_clients: parse_host_list(kv, "external_clients"),
            attackers: parse_host_list(kv, "attackers"),
        };
        let mut schedule = Vec::new();
        for (index, raw) in kv.get_all("attack").into_iter().enumerate() {
            let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(ScenarioError::Schedule {
                    index: index + 1,
                    reason: format!(
                        "expected `type, start, duration, attacker, victim, intensity`, got {raw:?}"
                    ),
                });
            }
            let entry = AttackEntry {
                attack_type: parse_attack_type_token(fields[0]).ok_or_else(|| {
                    ScenarioError::Schedule {
                        index: index + 1,
                        reason: format!("unknown attack type {:?}", fields[0]),
                    }
                })?,
                start: parse_timestamp(fields[1]).map_err(|e| ScenarioError::Schedule {
                    index: index + 1,
                    reason: e,
                })?,
                duration_secs: fields[2].parse().map_err(|_| ScenarioError::Schedule {
                    index: index + 1,
                    reason: format!("bad duration {:?}", fields[2]),
                })?,
                attacker: fields[3].to_string(),
                victim: fields[4].to_string(),
                intensity: fields[5].parse().map_err(|_| ScenarioError::Schedule {
                    index: index + 1,
                    reason: format!("bad intensity {:?}", fields[5]),
                })?,
            };
            schedule.push(entry);
        }
        let config = ScenarioConfig {
            seed: kv.parse_value::<u64>("seed")?.unwrap_or(0),
            start,
            duration_secs,
            benign_rate,
            hosts,
            schedule,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn end(&self) -> NaiveDateTime {
        self.start + chrono::Duration::seconds(self.duration_secs as i64)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.duration_secs == 0 {
            return Err(ScenarioError::BadConfig("duration must be positive".into()));
        }
        if self.benign_rate < 0.0 {
            return Err(ScenarioError::BadConfig("benign_rate must be >= 0".into()));
        }
        if self.benign_rate > 0.0 && (self.hosts.clients.is_empty() || self.hosts.servers.is_empty())
        {
            return Err(ScenarioError::BadConfig(
                "benign traffic needs at least one client and one server".into(),
            ));
        }
        for (i, entry) in self.schedule.iter().enumerate() {
            let index = i + 1;
            let fail = |reason: String| ScenarioError::Schedule { index, reason };
            if entry.intensity == 0 {
                return Err(fail("intensity must be >= 1".into()));
            }
            if entry.duration_secs == 0 {
                return Err(fail("duration must be positive".into()));
            }
            if entry.start < self.start || entry.end() > self.end() {
                return Err(fail(format!(
                    "window {} .. {} lies outside the simulated time range",
                    render_timestamp(entry.start),
                    render_timestamp(entry.end()),
                )));
            }
            if !self.hosts.knows(&entry.attacker) {
                return Err(fail(format!("attacker host {:?} not in inventory", entry.attacker)));
            }
            let victim_known = self.hosts.is_internal(&entry.victim)
                || self.hosts.external_server.as_deref() == Some(entry.victim.as_str());
            if !victim_known {
                return Err(fail(format!("victim host {:?} not in inventory", entry.victim)));
            }
            if self.hosts.external_server.as_deref() == Some(entry.victim.as_str())
                && !self.hosts.is_attacker(&entry.attacker)
            {
                return Err(fail(
                    "attacks on the external server must come from designated attacker hosts"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// Benign flows the generator will emit, exactly.
    pub fn planned_benign_flows(&self) -> u64 {
        signatures::planned_benign_flows(self)
    }

    /// Attack flows (attacker side plus signature replies), exactly.
    pub fn planned_attack_flows(&self) -> u64 {
        self.schedule
            .iter()
            .map(|e| signatures::planned_attack_flows(e, &self.hosts))
            .sum()
    }
}

/// Identity fields the labeller looks at.
#[derive(Debug, Clone, Copy)]
pub struct FlowKey<'a> {
    pub time: NaiveDateTime,
    pub src_ip: &'a str,
    pub dst_ip: &'a str,
    pub src_port: u32,
    pub dst_port: u32,
}

impl<'a> FlowKey<'a> {
    pub fn of(flow: &'a RawFlow) -> FlowKey<'a> {
        FlowKey {
            time: flow.date_first_seen,
            src_ip: &flow.src_ip,
            dst_ip: &flow.dst_ip,
            src_port: flow.src_port,
            dst_port: flow.dst_port,
        }
    }
}

/// First schedule entry whose window covers the flow and whose attacker host
/// is one endpoint. Flows leaving the attacker are attacker-side; flows
/// directed back at the attacker are victim-side.
fn match_schedule<'a>(
    key: &FlowKey<'_>,
    schedule: &'a [AttackEntry],
) -> Option<(usize, &'a AttackEntry, ClassLabel)> {
    for (idx, entry) in schedule.iter().enumerate() {
        if !entry.window_contains(key.time) {
            continue;
        }
        if key.src_ip == entry.attacker {
            return Some((idx, entry, ClassLabel::Attacker));
        }
        if key.dst_ip == entry.attacker {
            return Some((idx, entry, ClassLabel::Victim));
        }
    }
    None
}

/// Labelling rule for traffic inside the emulated internal network: flows
/// matching a schedule entry by time and endpoints get the attacker or
/// victim role with the entry's attack type; everything else is normal.
pub fn label_openstack(
    key: &FlowKey<'_>,
    schedule: &[AttackEntry],
) -> (ClassLabel, AttackTypeLabel) {
    match match_schedule(key, schedule) {
        Some((_, entry, role)) => (role, entry.attack_type),
        None => (ClassLabel::Normal, AttackTypeLabel::None),
    }
}

/// Labelling rule for traffic touching the external server, applied in
/// order: known internal origins are normal; endpoints among the designated
/// attacker hosts mark attacker/victim; ports 80 and 443 are unknown;
/// everything else is suspicious.
pub fn label_external(key: &FlowKey<'_>, inventory: &HostInventory) -> ClassLabel {
    if inventory.is_internal(key.src_ip) {
        return ClassLabel::Normal;
    }
    if inventory.is_attacker(key.src_ip) {
        return ClassLabel::Attacker;
    }
    if inventory.is_attacker(key.dst_ip) {
        return ClassLabel::Victim;
    }
    if [key.src_port, key.dst_port]
        .iter()
        .any(|&p| p == 80 || p == 443)
    {
        return ClassLabel::Unknown;
    }
    ClassLabel::Suspicious
}

fn label_flow(
    key: &FlowKey<'_>,
    hosts: &HostInventory,
    schedule: &[AttackEntry],
) -> (ClassLabel, AttackTypeLabel, String) {
    let touches_external = hosts
        .external_server
        .as_deref()
        .is_some_and(|ext| key.src_ip == ext || key.dst_ip == ext);
    let matched = match_schedule(key, schedule);
    let attack_id = matched
        .map(|(idx, _, _)| (idx + 1).to_string())
        .unwrap_or_else(|| "---".to_string());
    if touches_external {
        let class = label_external(key, hosts);
        let attack_type = match matched {
            Some((_, entry, _)) if class != ClassLabel::Normal => entry.attack_type,
            _ => AttackTypeLabel::None,
        };
        let attack_id = if attack_type == AttackTypeLabel::None {
            "---".to_string()
        } else {
            attack_id
        };
        (class, attack_type, attack_id)
    } else {
        let (class, attack_type) = label_openstack(key, schedule);
        (class, attack_type, attack_id)
    }
}

/// Ground-truth sidecar row; agrees with the CSV labels row-for-row.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthRow {
    pub flow_index: u64,
    pub attack_id: String,
    pub class: ClassLabel,
    pub attack_type: AttackTypeLabel,
}

pub struct GeneratedTraffic {
    pub flows: Vec<RawFlow>,
    pub ground_truth: Vec<GroundTruthRow>,
}

/// Runs the generator: benign diurnal traffic, external-server traffic when
/// configured, and every scheduled attack, sorted by timestamp and labelled.
pub fn generate(config: &ScenarioConfig) -> Result<GeneratedTraffic, ScenarioError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut drafts = signatures::benign_traffic(config, &mut rng);
    for entry in &config.schedule {
        drafts.extend(signatures::attack_traffic(entry, &config.hosts, &mut rng));
    }
    drafts.sort_by_key(|d| d.time);

    let mut flows = Vec::with_capacity(drafts.len());
    let mut ground_truth = Vec::with_capacity(drafts.len());
    for (index, draft) in drafts.into_iter().enumerate() {
        let key = FlowKey {
            time: draft.time,
            src_ip: &draft.src_ip,
            dst_ip: &draft.dst_ip,
            src_port: draft.src_port,
            dst_port: draft.dst_port,
        };
        let (class, attack_type, attack_id) = label_flow(&key, &config.hosts, &config.schedule);
        ground_truth.push(GroundTruthRow {
            flow_index: index as u64,
            attack_id: attack_id.clone(),
            class,
            attack_type,
        });
        flows.push(draft.into_flow(class, attack_type, attack_id));
    }
    Ok(GeneratedTraffic { flows, ground_truth })
}

pub const GROUND_TRUTH_HEADER: &str = "flow_index,attack_id,class,attack_type";

/// Writes the flow CSV (ingest's header contract) and the ground-truth
/// sidecar CSV.
pub fn write_outputs(
    traffic: &GeneratedTraffic,
    flows_path: &Path,
    truth_path: &Path,
) -> Result<(), ScenarioError> {
    let mut writer = FlowWriter::create(flows_path)?;
    for flow in &traffic.flows {
        writer.write(flow)?;
    }
    writer.finish()?;

    let mut truth = std::io::BufWriter::new(std::fs::File::create(truth_path)?);
    writeln!(truth, "{GROUND_TRUTH_HEADER}")?;
    for row in &traffic.ground_truth {
        writeln!(
            truth,
            "{},{},{},{}",
            row.flow_index,
            row.attack_id,
            row.class.as_str(),
            row.attack_type.as_str()
        )?;
    }
    truth.flush()?;
    Ok(())
}
