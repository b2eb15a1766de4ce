//! Flow synthesis: benign service sessions on a diurnal profile and the
//! four attack signatures.
//!
//! Flow counts are fully determined by the config (rng only shapes field
//! values and sub-second placement), so the planned benign:attack ratio is
//! met exactly.

use chrono::{NaiveDateTime, Timelike};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AttackEntry, HostInventory, ScenarioConfig};
use crate::flow::{AttackTypeLabel, ClassLabel, RawFlow};

const TCP: &str = "TCP";
const UDP: &str = "UDP";
const ICMP: &str = "ICMP";

const FLAGS_SESSION: &str = ".AP.SF";
const FLAGS_SYN: &str = "....S.";
const FLAGS_RST_ACK: &str = ".A.R..";
const FLAGS_ACK: &str = ".A....";
const FLAGS_NONE: &str = "......";

/// An unlabelled flow; labels are attached after the global time sort.
#[derive(Debug, Clone)]
pub(crate) struct Draft {
    pub time: NaiveDateTime,
    pub duration: f64,
    pub proto: &'static str,
    pub src_ip: String,
    pub src_port: u32,
    pub dst_ip: String,
    pub dst_port: u32,
    pub packets: u64,
    pub bytes: u64,
    pub flags: &'static str,
    pub tos: i64,
}

impl Draft {
    pub(crate) fn into_flow(
        self,
        class: ClassLabel,
        attack_type: AttackTypeLabel,
        attack_id: String,
    ) -> RawFlow {
        RawFlow {
            date_first_seen: self.time,
            duration: self.duration,
            proto: self.proto.to_string(),
            src_ip: self.src_ip,
            src_port: self.src_port,
            dst_ip: self.dst_ip,
            dst_port: self.dst_port,
            packets: self.packets,
            bytes: self.bytes,
            flows: 1,
            flags: self.flags.to_string(),
            tos: self.tos,
            class_label: class,
            attack_type,
            attack_id,
            attack_description: "---".to_string(),
        }
    }
}

/// Relative benign rate per hour of day; working hours peak at 1.0.
fn diurnal(hour: u32) -> f64 {
    match hour {
        6..=7 => 0.5,
        8..=17 => 1.0,
        18..=21 => 0.4,
        _ => 0.15,
    }
}

/// Share of internal sessions mirrored as anonymous web hits on the
/// external server, and as odd-port probes against it.
const EXTERNAL_WEB_SHARE: f64 = 0.12;
const EXTERNAL_ODD_SHARE: f64 = 0.06;

/// Every nth internal session browses the external server instead of an
/// internal one.
const INTERNAL_TO_EXTERNAL_EVERY: u64 = 6;

struct HourPlan {
    offset_secs: u32,
    span_secs: u32,
    sessions: u64,
    external_web: u64,
    external_odd: u64,
}

fn hour_plans(config: &ScenarioConfig) -> Vec<HourPlan> {
    let mut plans = Vec::new();
    let mut offset = 0u32;
    let has_external =
        config.hosts.external_server.is_some() && !config.hosts.external_clients.is_empty();
    while offset < config.duration_secs {
        let span = (config.duration_secs - offset).min(3600);
        let at = config.start + chrono::Duration::seconds(offset as i64);
        let sessions =
            (config.benign_rate * diurnal(at.hour()) * span as f64 / 2.0).round() as u64;
        let (external_web, external_odd) = if has_external {
            (
                (sessions as f64 * EXTERNAL_WEB_SHARE).round() as u64,
                (sessions as f64 * EXTERNAL_ODD_SHARE).round() as u64,
            )
        } else {
            (0, 0)
        };
        plans.push(HourPlan {
            offset_secs: offset,
            span_secs: span,
            sessions,
            external_web,
            external_odd,
        });
        offset += span;
    }
    plans
}

/// Exact benign flow count the generator will emit for this config.
pub(crate) fn planned_benign_flows(config: &ScenarioConfig) -> u64 {
    hour_plans(config)
        .iter()
        .map(|p| 2 * (p.sessions + p.external_web + p.external_odd))
        .sum()
}

#[derive(Clone, Copy)]
enum Service {
    Http,
    Https,
    Dns,
    Ssh,
    Smtp,
    IcmpEcho,
}

fn pick_service(rng: &mut ChaCha8Rng) -> Service {
    match rng.gen_range(0u32..100) {
        0..=29 => Service::Http,
        30..=59 => Service::Https,
        60..=79 => Service::Dns,
        80..=87 => Service::Ssh,
        88..=93 => Service::Smtp,
        _ => Service::IcmpEcho,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, hosts: &'a [String]) -> &'a str {
    &hosts[rng.gen_range(0..hosts.len())]
}

fn ephemeral_port(rng: &mut ChaCha8Rng) -> u32 {
    rng.gen_range(1024u32..=65535)
}

fn millis(rng: &mut ChaCha8Rng, upper_ms: u64) -> chrono::Duration {
    chrono::Duration::milliseconds(rng.gen_range(0..upper_ms.max(1)) as i64)
}

/// One request/response pair for a benign service session.
fn benign_session(
    rng: &mut ChaCha8Rng,
    time: NaiveDateTime,
    client: &str,
    server: &str,
    service: Service,
) -> [Draft; 2] {
    let client_port = ephemeral_port(rng);
    let (proto, server_port, flags) = match service {
        Service::Http => (TCP, 80, FLAGS_SESSION),
        Service::Https => (TCP, 443, FLAGS_SESSION),
        Service::Dns => (UDP, 53, FLAGS_NONE),
        Service::Ssh => (TCP, 22, FLAGS_SESSION),
        Service::Smtp => (TCP, 25, FLAGS_SESSION),
        Service::IcmpEcho => (ICMP, 0, FLAGS_NONE),
    };
    let (duration_ms, req_packets, resp_packets, req_byte_rate, resp_byte_rate) = match service {
        Service::Http | Service::Https => (
            rng.gen_range(50u64..2000),
            rng.gen_range(3u64..15),
            rng.gen_range(4u64..30),
            rng.gen_range(60u64..400),
            rng.gen_range(300u64..1400),
        ),
        Service::Dns => (
            rng.gen_range(1u64..50),
            rng.gen_range(1u64..3),
            rng.gen_range(1u64..3),
            rng.gen_range(60u64..120),
            rng.gen_range(80u64..400),
        ),
        Service::Ssh => (
            rng.gen_range(1000u64..30_000),
            rng.gen_range(10u64..60),
            rng.gen_range(10u64..60),
            rng.gen_range(50u64..200),
            rng.gen_range(50u64..200),
        ),
        Service::Smtp => (
            rng.gen_range(100u64..5000),
            rng.gen_range(6u64..20),
            rng.gen_range(4u64..12),
            rng.gen_range(80u64..500),
            rng.gen_range(60u64..200),
        ),
        Service::IcmpEcho => (0, rng.gen_range(1u64..3), 1, 64, 64),
    };
    let (client_port, server_port) = match service {
        Service::IcmpEcho => (0, 0),
        _ => (client_port, server_port),
    };
    let request = Draft {
        time,
        duration: duration_ms as f64 / 1000.0,
        proto,
        src_ip: client.to_string(),
        src_port: client_port,
        dst_ip: server.to_string(),
        dst_port: server_port,
        packets: req_packets,
        bytes: req_packets * req_byte_rate,
        flags,
        tos: 0,
    };
    let response = Draft {
        time: time + millis(rng, duration_ms.max(1)) + chrono::Duration::milliseconds(1),
        duration: (duration_ms as f64 / 1000.0 * 0.8 * 1000.0).round() / 1000.0,
        proto,
        src_ip: server.to_string(),
        src_port: server_port,
        dst_ip: client.to_string(),
        dst_port: client_port,
        packets: resp_packets,
        bytes: resp_packets * resp_byte_rate,
        flags,
        tos: 0,
    };
    [request, response]
}

/// Benign traffic for the whole scenario: internal service sessions on the
/// diurnal profile, a slice of them aimed at the external server, and
/// anonymous web/odd-port sessions against the external server.
pub(crate) fn benign_traffic(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<Draft> {
    let mut drafts = Vec::new();
    let hosts = &config.hosts;
    let mut session_counter = 0u64;
    for plan in hour_plans(config) {
        let hour_start = config.start + chrono::Duration::seconds(plan.offset_secs as i64);
        let span_ms = plan.span_secs as u64 * 1000;
        for _ in 0..plan.sessions {
            session_counter += 1;
            let time = hour_start + millis(rng, span_ms);
            let client = pick(rng, &hosts.clients).to_string();
            let to_external = hosts.external_server.is_some()
                && session_counter.is_multiple_of(INTERNAL_TO_EXTERNAL_EVERY);
            if to_external {
                let server = hosts.external_server.clone().expect("checked above");
                let service = if rng.gen_bool(0.5) { Service::Http } else { Service::Https };
                drafts.extend(benign_session(rng, time, &client, &server, service));
            } else {
                let server = pick(rng, &hosts.servers).to_string();
                let service = pick_service(rng);
                drafts.extend(benign_session(rng, time, &client, &server, service));
            }
        }
        if plan.external_web + plan.external_odd > 0 {
            let external = hosts.external_server.as_deref().expect("external plans");
            for _ in 0..plan.external_web {
                let time = hour_start + millis(rng, span_ms);
                let client = pick(rng, &hosts.external_clients).to_string();
                let service = if rng.gen_bool(0.5) { Service::Http } else { Service::Https };
                drafts.extend(benign_session(rng, time, &client, external, service));
            }
            for _ in 0..plan.external_odd {
                let time = hour_start + millis(rng, span_ms);
                let client = pick(rng, &hosts.external_clients).to_string();
                let service = if rng.gen_bool(0.5) { Service::Ssh } else { Service::Smtp };
                drafts.extend(benign_session(rng, time, &client, external, service));
            }
        }
    }
    drafts
}

/// Destination of the i-th ping-sweep probe: neighbours in the victim's /24.
fn sweep_ip(victim: &str, i: u32) -> String {
    let prefix = victim.rsplit_once('.').map(|(p, _)| p).unwrap_or(victim);
    format!("{prefix}.{}", (i % 254) + 1)
}

/// Exact attack flow count (attacker side plus replies) for one entry.
pub(crate) fn planned_attack_flows(entry: &AttackEntry, hosts: &HostInventory) -> u64 {
    let intensity = entry.intensity as u64;
    match entry.attack_type {
        AttackTypeLabel::PortScan => intensity + intensity / 5,
        AttackTypeLabel::Dos => intensity + intensity / 20,
        AttackTypeLabel::BruteForce => 2 * intensity,
        AttackTypeLabel::PingScan => {
            let replies = (0..entry.intensity)
                .filter(|&i| hosts.is_internal(&sweep_ip(&entry.victim, i)))
                .count() as u64;
            intensity + replies
        }
        AttackTypeLabel::None => 0,
    }
}

/// Evenly spread attack-flow times across the window, with sub-spacing
/// jitter so bursts do not quantize onto a grid.
fn spread(entry: &AttackEntry, i: u32, rng: &mut ChaCha8Rng) -> NaiveDateTime {
    let window_ms = entry.duration_secs as u64 * 1000;
    let base = window_ms * i as u64 / entry.intensity as u64;
    let spacing = (window_ms / entry.intensity as u64).clamp(1, 1000);
    let at = (base + rng.gen_range(0..spacing)).min(window_ms);
    entry.start + chrono::Duration::milliseconds(at as i64)
}

/// Emits one schedule entry's flows per its attack-type signature:
/// ping scans sweep destination addresses with ICMP, port scans sweep
/// destination ports with short SYN probes, DoS floods one port with small
/// payloads, brute force repeats short sessions against one service port.
pub fn attack_signature(
    entry: &AttackEntry,
    hosts: &HostInventory,
    rng: &mut ChaCha8Rng,
) -> Vec<RawFlow> {
    // public surface returns labelled flows; generation itself works on
    // drafts so the global sort can relabel consistently
    attack_traffic(entry, hosts, rng)
        .into_iter()
        .map(|d| {
            let key = super::FlowKey {
                time: d.time,
                src_ip: &d.src_ip,
                dst_ip: &d.dst_ip,
                src_port: d.src_port,
                dst_port: d.dst_port,
            };
            let (class, attack_type) = super::label_openstack(&key, std::slice::from_ref(entry));
            d.clone().into_flow(class, attack_type, "1".to_string())
        })
        .collect()
}

pub(crate) fn attack_traffic(
    entry: &AttackEntry,
    hosts: &HostInventory,
    rng: &mut ChaCha8Rng,
) -> Vec<Draft> {
    let mut drafts = Vec::new();
    match entry.attack_type {
        AttackTypeLabel::PortScan => {
            for i in 0..entry.intensity {
                let time = spread(entry, i, rng);
                let src_port = ephemeral_port(rng);
                let dst_port = (i % 65535) + 1;
                drafts.push(Draft {
                    time,
                    duration: 0.0,
                    proto: TCP,
                    src_ip: entry.attacker.clone(),
                    src_port,
                    dst_ip: entry.victim.clone(),
                    dst_port,
                    packets: 1,
                    bytes: rng.gen_range(40u64..60),
                    flags: FLAGS_SYN,
                    tos: 0,
                });
                if (i + 1) % 5 == 0 {
                    drafts.push(Draft {
                        time: time + chrono::Duration::milliseconds(rng.gen_range(1i64..4)),
                        duration: 0.0,
                        proto: TCP,
                        src_ip: entry.victim.clone(),
                        src_port: dst_port,
                        dst_ip: entry.attacker.clone(),
                        dst_port: src_port,
                        packets: 1,
                        bytes: 40,
                        flags: FLAGS_RST_ACK,
                        tos: 0,
                    });
                }
            }
        }
        AttackTypeLabel::PingScan => {
            for i in 0..entry.intensity {
                let time = spread(entry, i, rng);
                let target = sweep_ip(&entry.victim, i);
                let packets = rng.gen_range(1u64..3);
                drafts.push(Draft {
                    time,
                    duration: 0.0,
                    proto: ICMP,
                    src_ip: entry.attacker.clone(),
                    src_port: 0,
                    dst_ip: target.clone(),
                    dst_port: 0,
                    packets,
                    bytes: packets * rng.gen_range(64u64..85),
                    flags: FLAGS_NONE,
                    tos: 0,
                });
                if hosts.is_internal(&target) {
                    drafts.push(Draft {
                        time: time + chrono::Duration::milliseconds(rng.gen_range(1i64..3)),
                        duration: 0.0,
                        proto: ICMP,
                        src_ip: target,
                        src_port: 0,
                        dst_ip: entry.attacker.clone(),
                        dst_port: 0,
                        packets,
                        bytes: packets * 64,
                        flags: FLAGS_NONE,
                        tos: 0,
                    });
                }
            }
        }
        AttackTypeLabel::Dos => {
            for i in 0..entry.intensity {
                let time = spread(entry, i, rng);
                let src_port = ephemeral_port(rng);
                drafts.push(Draft {
                    time,
                    duration: (rng.gen_range(0u64..500)) as f64 / 1000.0,
                    proto: TCP,
                    src_ip: entry.attacker.clone(),
                    src_port,
                    dst_ip: entry.victim.clone(),
                    dst_port: 80,
                    packets: rng.gen_range(1u64..4),
                    bytes: rng.gen_range(40u64..150),
                    flags: FLAGS_SYN,
                    tos: 0,
                });
                if (i + 1) % 20 == 0 {
                    drafts.push(Draft {
                        time: time + chrono::Duration::milliseconds(rng.gen_range(1i64..3)),
                        duration: 0.0,
                        proto: TCP,
                        src_ip: entry.victim.clone(),
                        src_port: 80,
                        dst_ip: entry.attacker.clone(),
                        dst_port: src_port,
                        packets: 1,
                        bytes: 40,
                        flags: FLAGS_ACK,
                        tos: 0,
                    });
                }
            }
        }
        AttackTypeLabel::BruteForce => {
            for i in 0..entry.intensity {
                let time = spread(entry, i, rng);
                let src_port = ephemeral_port(rng);
                let duration_ms = rng.gen_range(500u64..3000);
                let packets = rng.gen_range(8u64..26);
                drafts.push(Draft {
                    time,
                    duration: duration_ms as f64 / 1000.0,
                    proto: TCP,
                    src_ip: entry.attacker.clone(),
                    src_port,
                    dst_ip: entry.victim.clone(),
                    dst_port: 22,
                    packets,
                    bytes: packets * rng.gen_range(70u64..130),
                    flags: FLAGS_SESSION,
                    tos: 0,
                });
                let reply_packets = rng.gen_range(6u64..16);
                drafts.push(Draft {
                    time: time + chrono::Duration::milliseconds(rng.gen_range(2i64..10)),
                    duration: (duration_ms as f64 * 0.9 / 1000.0 * 1000.0).round() / 1000.0,
                    proto: TCP,
                    src_ip: entry.victim.clone(),
                    src_port: 22,
                    dst_ip: entry.attacker.clone(),
                    dst_port: src_port,
                    packets: reply_packets,
                    bytes: reply_packets * rng.gen_range(60u64..110),
                    flags: FLAGS_SESSION,
                    tos: 0,
                });
            }
        }
        AttackTypeLabel::None => {}
    }
    drafts
}
