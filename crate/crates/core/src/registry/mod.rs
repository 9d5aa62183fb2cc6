//! Static taxonomy: functionalities, target groups, instruction segments,
//! demonstrations, slur lists and validation plans.
//!
//! The taxonomy ships as JSON (`data/registry.json`) so that functionality
//! edits need no rebuild. [`Registry::bundled`] embeds the default copy.

mod template;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::validation::{TestKind, ValidationPlan, NLI_TARGET};

pub use template::{fill_masks, instantiate_instruction, TemplateError, IDENTITY_MASK, SLUR_MASK};

/// Number of functionalities in the taxonomy (F1..=F24).
pub const FUNCTIONALITY_COUNT: u8 = 24;

const BUNDLED_REGISTRY: &str = include_str!("../../data/registry.json");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read registry {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("registry schema error at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("registry integrity error: {0}")]
    Integrity(String),
}

/// Functionality identifier `F1`..`F24`. Orders numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionalityId(u8);

impl FunctionalityId {
    pub fn new(number: u8) -> Option<Self> {
        (1..=FUNCTIONALITY_COUNT)
            .contains(&number)
            .then_some(Self(number))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = FunctionalityId> {
        (1..=FUNCTIONALITY_COUNT).map(FunctionalityId)
    }
}

impl fmt::Display for FunctionalityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.0)
    }
}

impl FromStr for FunctionalityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('F')
            .or_else(|| s.strip_prefix('f'))
            .ok_or_else(|| format!("functionality id must look like F<n>, got {s:?}"))?;
        digits
            .parse::<u8>()
            .ok()
            .and_then(FunctionalityId::new)
            .ok_or_else(|| format!("functionality id out of range: {s:?}"))
    }
}

impl Serialize for FunctionalityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FunctionalityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Binary gold label, stored as `1` (hateful) / `0` (non-hateful).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NonHateful,
    Hateful,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonHateful => 0,
            Label::Hateful => 1,
        }
    }

    pub fn from_u8(value: u8) -> Option<Self> {
        match value {
            0 => Some(Label::NonHateful),
            1 => Some(Label::Hateful),
            _ => None,
        }
    }

    pub fn is_hateful(self) -> bool {
        self == Label::Hateful
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::NonHateful => "non-hateful",
            Label::Hateful => "hateful",
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = u8::deserialize(deserializer)?;
        Label::from_u8(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("gold_label must be 0 or 1, got {raw}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Functionality {
    pub id: FunctionalityId,
    pub category: String,
    pub gold_label: Label,
    pub instruction_segment: String,
    pub demonstration: Option<String>,
    pub requires_slurs: bool,
    pub targets_protected_group: bool,
    pub validation_plan: ValidationPlan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetGroup {
    pub name: String,
    pub identity_term: String,
    pub slurs: Vec<String>,
}

/// The loaded taxonomy. Immutable after loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    functionalities: Vec<Functionality>,
    target_groups: Vec<TargetGroup>,
}

/// Canonical gold labels: these functionalities are non-hateful, every other
/// one is hateful.
const NON_HATEFUL: [u8; 11] = [8, 9, 11, 15, 18, 19, 20, 21, 22, 23, 24];
const SLUR_PROMPTED: [u8; 2] = [7, 9];
const NO_PROTECTED_TARGET: [u8; 4] = [11, 22, 23, 24];

impl Registry {
    /// The registry compiled into the binary.
    pub fn bundled() -> Self {
        Self::from_json_str(BUNDLED_REGISTRY).expect("bundled registry is valid")
    }

    pub fn bundled_json() -> &'static str {
        BUNDLED_REGISTRY
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RegistryError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, RegistryError> {
        let registry: Registry =
            serde_json::from_str(text).map_err(|e| RegistryError::Schema {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        registry.check_integrity()?;
        Ok(registry)
    }

    /// Pretty JSON in the on-disk layout, with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("registry serializes");
        out.push('\n');
        out
    }

    pub fn functionalities(&self) -> &[Functionality] {
        &self.functionalities
    }

    pub fn target_groups(&self) -> &[TargetGroup] {
        &self.target_groups
    }

    pub fn functionality(&self, id: FunctionalityId) -> Option<&Functionality> {
        self.functionalities.iter().find(|f| f.id == id)
    }

    pub fn group(&self, name: &str) -> Option<&TargetGroup> {
        self.target_groups.iter().find(|g| g.name == name)
    }

    /// Groups a functionality is instantiated for: every group for
    /// protected-group functionalities, otherwise the single `None` cell.
    pub fn applicable_groups(&self, f: &Functionality) -> Vec<Option<&TargetGroup>> {
        if f.targets_protected_group {
            self.target_groups.iter().map(Some).collect()
        } else {
            vec![None]
        }
    }

    fn check_integrity(&self) -> Result<(), RegistryError> {
        let integrity = |msg: String| Err(RegistryError::Integrity(msg));

        let mut seen = HashSet::new();
        for f in &self.functionalities {
            if !seen.insert(f.id) {
                return integrity(format!("duplicate functionality id {}", f.id));
            }
        }
        if let Some(missing) = FunctionalityId::all().find(|id| !seen.contains(id)) {
            return integrity(format!("functionality {missing} is missing"));
        }

        let mut names = HashSet::new();
        for g in &self.target_groups {
            if !names.insert(g.name.as_str()) {
                return integrity(format!("duplicate target group {:?}", g.name));
            }
            if g.name == "none" {
                return integrity("target group name \"none\" is reserved".into());
            }
            if g.slurs.iter().all(|s| s.trim().is_empty()) {
                return integrity(format!("target group {:?} has no slurs", g.name));
            }
            if g.identity_term.trim().is_empty() {
                return integrity(format!("target group {:?} has an empty identity term", g.name));
            }
        }
        if self.target_groups.is_empty() {
            return integrity("no target groups".into());
        }

        for f in &self.functionalities {
            let n = f.id.number();
            let expected_label = if NON_HATEFUL.contains(&n) {
                Label::NonHateful
            } else {
                Label::Hateful
            };
            if f.gold_label != expected_label {
                return integrity(format!(
                    "{} must be labelled {} ({})",
                    f.id,
                    expected_label.as_u8(),
                    expected_label.name()
                ));
            }
            if f.requires_slurs != SLUR_PROMPTED.contains(&n) {
                return integrity(format!(
                    "{} has requires_slurs={}, expected {}",
                    f.id,
                    f.requires_slurs,
                    !f.requires_slurs
                ));
            }
            if f.targets_protected_group == NO_PROTECTED_TARGET.contains(&n) {
                return integrity(format!(
                    "{} has targets_protected_group={}, expected {}",
                    f.id, f.targets_protected_group, !f.targets_protected_group
                ));
            }
            if f.instruction_segment.contains(SLUR_MASK) && !f.requires_slurs {
                return integrity(format!("{} uses {SLUR_MASK} without requires_slurs", f.id));
            }
            if !f.targets_protected_group && f.instruction_segment.contains(IDENTITY_MASK) {
                return integrity(format!("{} has no target group but uses {IDENTITY_MASK}", f.id));
            }
            self.check_plan(f)?;
        }
        Ok(())
    }

    fn check_plan(&self, f: &Functionality) -> Result<(), RegistryError> {
        let plan = &f.validation_plan;
        let fail = |msg: &str| Err(RegistryError::Integrity(format!("{}: {msg}", f.id)));
        if plan.tests.is_empty() {
            return fail("validation plan is empty");
        }
        if !plan.all_must_pass {
            return fail("validation plans are conjunctive (all_must_pass must be true)");
        }
        for test in &plan.tests {
            if let Err(msg) = test.check() {
                return fail(&msg);
            }
        }
        if f.targets_protected_group {
            let target_tests = plan.tests.iter().filter(|t| {
                t.kind == TestKind::Nli && t.hypothesis_template.as_deref() == Some(NLI_TARGET)
            });
            let mut has_positive = false;
            let mut has_negated = false;
            for t in target_tests {
                if t.negate {
                    has_negated = true;
                } else {
                    has_positive = true;
                }
            }
            if !has_positive && !has_negated {
                return fail("protected-group plan must include the target hypothesis or its negation");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled_value() -> serde_json::Value {
        serde_json::from_str(Registry::bundled_json()).unwrap()
    }

    fn load_value(v: &serde_json::Value) -> Result<Registry, RegistryError> {
        Registry::from_json_str(&serde_json::to_string(v).unwrap())
    }

    #[test]
    fn bundled_registry_shape() {
        let reg = Registry::bundled();
        assert_eq!(reg.functionalities().len(), 24);
        assert_eq!(reg.target_groups().len(), 7);
        for f in reg.functionalities() {
            assert!(!f.validation_plan.tests.is_empty());
        }
    }

    #[test]
    fn gold_labels_partition() {
        let reg = Registry::bundled();
        let non_hateful: Vec<u8> = reg
            .functionalities()
            .iter()
            .filter(|f| f.gold_label == Label::NonHateful)
            .map(|f| f.id.number())
            .collect();
        assert_eq!(non_hateful, vec![8, 9, 11, 15, 18, 19, 20, 21, 22, 23, 24]);
    }

    #[test]
    fn flags_match_taxonomy() {
        let reg = Registry::bundled();
        let slurs: Vec<u8> = reg
            .functionalities()
            .iter()
            .filter(|f| f.requires_slurs)
            .map(|f| f.id.number())
            .collect();
        assert_eq!(slurs, vec![7, 9]);
        let unprotected: Vec<u8> = reg
            .functionalities()
            .iter()
            .filter(|f| !f.targets_protected_group)
            .map(|f| f.id.number())
            .collect();
        assert_eq!(unprotected, vec![11, 22, 23, 24]);
    }

    #[test]
    fn missing_functionality_is_integrity_error() {
        let mut v = bundled_value();
        let fs = v["functionalities"].as_array_mut().unwrap();
        fs.retain(|f| f["id"] != "F13");
        let err = load_value(&v).unwrap_err();
        assert!(matches!(err, RegistryError::Integrity(ref m) if m.contains("F13")), "{err}");
    }

    #[test]
    fn missing_slur_flag_is_integrity_error() {
        let mut v = bundled_value();
        v["functionalities"][6]["requires_slurs"] = false.into();
        assert_eq!(v["functionalities"][6]["id"], "F7");
        let err = load_value(&v).unwrap_err();
        assert!(matches!(err, RegistryError::Integrity(ref m) if m.contains("F7")), "{err}");
    }

    #[test]
    fn duplicate_id_is_integrity_error() {
        let mut v = bundled_value();
        let dup = v["functionalities"][0].clone();
        v["functionalities"].as_array_mut().unwrap().push(dup);
        let err = load_value(&v).unwrap_err();
        assert!(matches!(err, RegistryError::Integrity(ref m) if m.contains("duplicate")));
    }

    #[test]
    fn wrong_label_is_integrity_error() {
        let mut v = bundled_value();
        v["functionalities"][0]["gold_label"] = 0.into();
        assert!(matches!(load_value(&v), Err(RegistryError::Integrity(_))));
    }

    #[test]
    fn group_without_slurs_is_integrity_error() {
        let mut v = bundled_value();
        v["target_groups"][0]["slurs"] = serde_json::json!([]);
        assert!(matches!(load_value(&v), Err(RegistryError::Integrity(_))));
    }

    #[test]
    fn schema_error_reports_position() {
        let err = Registry::from_json_str("{\n  \"functionalities\": 3\n}").unwrap_err();
        match err {
            RegistryError::Schema { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
        let err = Registry::from_json_str("{\"functionalities\": [], \"bogus\": 1}").unwrap_err();
        assert!(matches!(err, RegistryError::Schema { .. }));
    }

    #[test]
    fn serialization_matches_bundled_file() {
        let reg = Registry::bundled();
        assert_eq!(reg.to_json_string(), Registry::bundled_json());
        assert_eq!(Registry::from_json_str(&reg.to_json_string()).unwrap(), reg);
    }

    #[test]
    fn functionality_ids_parse_and_order() {
        let a: FunctionalityId = "F2".parse().unwrap();
        let b: FunctionalityId = "F10".parse().unwrap();
        assert!(a < b);
        assert!("F25".parse::<FunctionalityId>().is_err());
        assert!("F0".parse::<FunctionalityId>().is_err());
        assert!("X1".parse::<FunctionalityId>().is_err());
        assert_eq!(b.to_string(), "F10");
    }

    #[test]
    fn applicable_groups() {
        let reg = Registry::bundled();
        let f1 = reg.functionality("F1".parse().unwrap()).unwrap();
        let f22 = reg.functionality("F22".parse().unwrap()).unwrap();
        assert_eq!(reg.applicable_groups(f1).len(), 7);
        assert_eq!(reg.applicable_groups(f22), vec![None]);
    }
}
