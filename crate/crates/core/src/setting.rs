//! Setting records and the initial mental-state graph.
//!
//! A [`SettingRecord`] carries the location, both agents and the objects with
//! their placements. [`parse_setting`] turns it into G₀; the flat-text format
//! handled by [`parse_setting_text`] / [`render_setting_text`] is one key per
//! line:
//!
//! ```text
//! _task_name speech
//! _setting_name palace
//! _setting_desc A grand hall of marble.
//! _self_name king
//! _self_persona I am the king of this land.
//! _partner_name servant
//! _object a scepter : an ornate gold rod [wieldable]
//! _placement scepter self_carrying
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DiscreteGraph, EntityKind, Flag, Flags, GraphBuilder, GraphConfig, GraphError, Relation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfAgent {
    pub name: String,
    #[serde(default)]
    pub persona: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartnerAgent {
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holder {
    Room,
    SelfCarrying,
    SelfWearing,
    SelfWielding,
    PartnerCarrying,
    PartnerWearing,
    PartnerWielding,
}

impl Holder {
    pub const ALL: [Holder; 7] = [
        Holder::Room,
        Holder::SelfCarrying,
        Holder::SelfWearing,
        Holder::SelfWielding,
        Holder::PartnerCarrying,
        Holder::PartnerWearing,
        Holder::PartnerWielding,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Holder::Room => "room",
            Holder::SelfCarrying => "self_carrying",
            Holder::SelfWearing => "self_wearing",
            Holder::SelfWielding => "self_wielding",
            Holder::PartnerCarrying => "partner_carrying",
            Holder::PartnerWearing => "partner_wearing",
            Holder::PartnerWielding => "partner_wielding",
        }
    }

    pub fn parse(s: &str) -> Option<Holder> {
        Holder::ALL.into_iter().find(|h| h.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub object_name: String,
    pub holder: Holder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingRecord {
    #[serde(default)]
    pub task_name: String,
    pub setting_name: String,
    #[serde(default)]
    pub setting_description: String,
    pub self_agent: SelfAgent,
    pub partner_agent: PartnerAgent,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub placements: Vec<Placement>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SettingError {
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("placement references undeclared object {0:?}")]
    DanglingPlacement(String),
    #[error("object {0:?} is placed more than once")]
    DuplicatePlacement(String),
    #[error("self and partner agents are both named {0:?}")]
    SameAgent(String),
    #[error("empty name for {0}")]
    EmptyName(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: expected {expected}")]
pub struct ParseError {
    /// 1-based line number; 0 when the error concerns the whole document.
    pub line: usize,
    pub expected: String,
}

/// Name of the persona node for `agent`.
pub fn persona_node_name(agent: &str) -> String {
    format!("persona of {agent}")
}

/// Name of the description node for `object`.
pub fn description_node_name(object: &str) -> String {
    format!("description of {object}")
}

pub const SINK_NAME: &str = "consumed";

fn norm(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl SettingRecord {
    pub fn self_name(&self) -> String {
        norm(&self.self_agent.name)
    }

    pub fn partner_name(&self) -> String {
        norm(&self.partner_agent.name)
    }

    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<(), SettingError> {
        let (me, partner) = (self.self_name(), self.partner_name());
        if norm(&self.setting_name).is_empty() {
            return Err(SettingError::EmptyName("setting"));
        }
        if me.is_empty() {
            return Err(SettingError::EmptyName("self agent"));
        }
        if partner.is_empty() {
            return Err(SettingError::EmptyName("partner agent"));
        }
        if me == partner {
            return Err(SettingError::SameAgent(me));
        }
        let mut declared = BTreeSet::new();
        for obj in &self.objects {
            let name = norm(&obj.name);
            if name.is_empty() {
                return Err(SettingError::EmptyName("object"));
            }
            if !declared.insert(name.clone()) {
                return Err(SettingError::DuplicateName(name));
            }
        }
        let mut placed = BTreeSet::new();
        for p in &self.placements {
            let name = norm(&p.object_name);
            if !declared.contains(&name) {
                return Err(SettingError::DanglingPlacement(name));
            }
            if !placed.insert(name.clone()) {
                return Err(SettingError::DuplicatePlacement(name));
            }
        }
        Ok(())
    }
}

/// Builds the initial mental-state graph for a setting.
///
/// Entity order (and therefore dense slot order) is: room, self, partner,
/// both persona nodes, then each object followed by its description node, and
/// finally the consumption sink.
pub fn parse_setting(record: &SettingRecord, config: GraphConfig) -> Result<DiscreteGraph, SettingError> {
    record.validate()?;
    let mut b = GraphBuilder::new(config);
    let dup = |e: GraphError| match e {
        GraphError::DuplicateName(n) => SettingError::DuplicateName(n),
        other => SettingError::Graph(other),
    };
    let room = b
        .entity_with(
            &norm(&record.setting_name),
            EntityKind::Room,
            Flags::empty(),
            &record.setting_description,
        )
        .map_err(dup)?;
    let me = b.entity(&record.self_name(), EntityKind::Agent).map_err(dup)?;
    let partner = b.entity(&record.partner_name(), EntityKind::Agent).map_err(dup)?;
    let me_persona = b
        .entity_with(
            &persona_node_name(&record.self_name()),
            EntityKind::Persona,
            Flags::empty(),
            &record.self_agent.persona,
        )
        .map_err(dup)?;
    let partner_persona = b
        .entity(&persona_node_name(&record.partner_name()), EntityKind::Persona)
        .map_err(dup)?;
    b.edge(Relation::Contains, room, me)?;
    b.edge(Relation::Contains, room, partner)?;
    b.edge(Relation::HasPersona, me, me_persona)?;
    b.edge(Relation::HasPersona, partner, partner_persona)?;

    let mut object_ids = Vec::with_capacity(record.objects.len());
    for obj in &record.objects {
        let name = norm(&obj.name);
        let mut flags = obj.flags;
        flags.remove(Flag::Consumed);
        let id = b.entity_with(&name, EntityKind::Object, flags, "").map_err(dup)?;
        let desc = b
            .entity_with(
                &description_node_name(&name),
                EntityKind::Description,
                Flags::empty(),
                &obj.description,
            )
            .map_err(dup)?;
        b.edge(Relation::HasDescription, id, desc)?;
        object_ids.push((name, id));
    }
    b.entity(SINK_NAME, EntityKind::Sink).map_err(dup)?;

    for p in &record.placements {
        let name = norm(&p.object_name);
        let (_, obj) = object_ids
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| SettingError::DanglingPlacement(name.clone()))?;
        let (relation, src) = match p.holder {
            Holder::Room => (Relation::Contains, room),
            Holder::SelfCarrying => (Relation::Carrying, me),
            Holder::SelfWearing => (Relation::Wearing, me),
            Holder::SelfWielding => (Relation::Wielding, me),
            Holder::PartnerCarrying => (Relation::Carrying, partner),
            Holder::PartnerWearing => (Relation::Wearing, partner),
            Holder::PartnerWielding => (Relation::Wielding, partner),
        };
        b.edge(relation, src, *obj)?;
    }
    Ok(b.build()?)
}

const KEYS: [&str; 8] = [
    "_task_name",
    "_setting_name",
    "_setting_desc",
    "_self_name",
    "_self_persona",
    "_partner_name",
    "_object",
    "_placement",
];

const ARTICLES: [&str; 4] = ["a", "an", "the", "some"];

/// Bracket tags that are LIGHT affordances without a flag of their own.
const IGNORED_TAGS: [&str; 4] = ["wieldable", "weapon", "gettable", "wield"];

fn strip_article(name: &str) -> &str {
    let trimmed = name.trim();
    for art in ARTICLES {
        if let Some(rest) = trimmed.strip_prefix(art) {
            if rest.starts_with(' ') {
                return rest.trim_start();
            }
        }
    }
    trimmed
}

fn parse_object_line(value: &str, line: usize) -> Result<ObjectSpec, ParseError> {
    let err = |expected: &str| ParseError {
        line,
        expected: expected.to_string(),
    };
    let (name, rest) = value
        .split_once(" : ")
        .ok_or_else(|| err("`_object <name> : <description> [flags]`"))?;
    let name = norm(strip_article(name));
    if name.is_empty() {
        return Err(err("object name"));
    }
    let mut description = rest.trim();
    let mut flags = Flags::empty();
    while description.ends_with(']') {
        let open = description.rfind('[').ok_or_else(|| err("`[` opening the flag list"))?;
        let inner = &description[open + 1..description.len() - 1];
        for tag in inner.split([',', ' ']).map(str::trim).filter(|t| !t.is_empty()) {
            let tag = tag.to_lowercase();
            let tag = tag.strip_prefix("is_").unwrap_or(&tag);
            if let Some(flag) = Flag::parse(tag).filter(|f| *f != Flag::Consumed) {
                flags.insert(flag);
            } else if !IGNORED_TAGS.contains(&tag) {
                return Err(err(&format!("a known affordance tag, got {tag:?}")));
            }
        }
        description = description[..open].trim_end();
    }
    Ok(ObjectSpec {
        name,
        description: description.to_string(),
        flags,
    })
}

/// Parses the flat-text setting format. Unknown keys are rejected.
pub fn parse_setting_text(raw: &str) -> Result<SettingRecord, ParseError> {
    let mut task = None;
    let mut setting_name = None;
    let mut setting_desc = None;
    let mut self_name = None;
    let mut self_persona = None;
    let mut partner_name = None;
    let mut objects = Vec::new();
    let mut placements = Vec::new();

    for (i, raw_line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (line, ""),
        };
        let set_once = |slot: &mut Option<String>| -> Result<(), ParseError> {
            if slot.is_some() {
                return Err(ParseError {
                    line: line_no,
                    expected: format!("a single `{key}` line"),
                });
            }
            *slot = Some(value.to_string());
            Ok(())
        };
        match key {
            "_task_name" => set_once(&mut task)?,
            "_setting_name" => set_once(&mut setting_name)?,
            "_setting_desc" => set_once(&mut setting_desc)?,
            "_self_name" => set_once(&mut self_name)?,
            "_self_persona" => set_once(&mut self_persona)?,
            "_partner_name" => set_once(&mut partner_name)?,
            "_object" => objects.push(parse_object_line(value, line_no)?),
            "_placement" => {
                let (object, holder) = value.rsplit_once(char::is_whitespace).ok_or_else(|| ParseError {
                    line: line_no,
                    expected: "`_placement <object> <holder>`".to_string(),
                })?;
                let holder = Holder::parse(holder.trim()).ok_or_else(|| ParseError {
                    line: line_no,
                    expected: format!("a holder ({})", Holder::ALL.map(Holder::as_str).join("|")),
                })?;
                placements.push(Placement {
                    object_name: norm(strip_article(object)),
                    holder,
                });
            }
            other => {
                return Err(ParseError {
                    line: line_no,
                    expected: format!("one of {} (got {other:?})", KEYS.join(", ")),
                })
            }
        }
    }
    let missing = |key: &str| ParseError {
        line: 0,
        expected: format!("a `{key}` line"),
    };
    let setting_name = setting_name.ok_or_else(|| missing("_setting_name"))?;
    let self_name = self_name.ok_or_else(|| missing("_self_name"))?;
    let partner_name = partner_name.ok_or_else(|| missing("_partner_name"))?;
    Ok(SettingRecord {
        task_name: task.unwrap_or_default(),
        setting_name,
        setting_description: setting_desc.unwrap_or_default(),
        self_agent: SelfAgent {
            name: self_name,
            persona: self_persona.unwrap_or_default(),
        },
        partner_agent: PartnerAgent { name: partner_name },
        objects,
        placements,
    })
}

/// Inverse of [`parse_setting_text`] for records whose names carry no
/// leading article.
pub fn render_setting_text(record: &SettingRecord) -> String {
    let mut out = String::new();
    let mut line = |key: &str, value: &dyn fmt::Display| {
        out.push_str(key);
        out.push(' ');
        out.push_str(&value.to_string());
        out.push('\n');
    };
    line("_task_name", &record.task_name);
    line("_setting_name", &record.setting_name);
    line("_setting_desc", &record.setting_description);
    line("_self_name", &record.self_agent.name);
    line("_self_persona", &record.self_agent.persona);
    line("_partner_name", &record.partner_agent.name);
    for obj in &record.objects {
        let mut value = format!("{} : {}", obj.name, obj.description);
        if !obj.flags.is_empty() {
            let tags: Vec<_> = obj.flags.iter().map(Flag::as_str).collect();
            value.push_str(&format!(" [{}]", tags.join(", ")));
        }
        line("_object", &value);
    }
    for p in &record.placements {
        line("_placement", &format!("{} {}", p.object_name, p.holder.as_str()));
    }
    out
}
