use thiserror::Error;

use super::{Functionality, FunctionalityId, TargetGroup};

pub const IDENTITY_MASK: &str = "[IDENTITY]";
pub const SLUR_MASK: &str = "[SLUR]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("{0} targets a protected group; a target group is required")]
    GroupRequired(FunctionalityId),
    #[error("{0} does not target a protected group; no target group may be given")]
    GroupNotAllowed(FunctionalityId),
    #[error("target group {0:?} has no slurs to fill [SLUR]")]
    NoSlurs(String),
    #[error("unresolved mask token left in {text:?}")]
    ResidualMask { text: String },
}

/// Replaces `[IDENTITY]` with the group's identity term and each `[SLUR]`
/// with the group's slurs in listed order, wrapping around when there are
/// more masks than slurs.
///
/// Masks are case-sensitive literals. Without a group the template is
/// returned unchanged unless it holds a mask, which is a
/// [`TemplateError::ResidualMask`].
pub fn fill_masks(template: &str, group: Option<&TargetGroup>) -> Result<String, TemplateError> {
    let filled = match group {
        Some(g) => {
            let with_identity = template.replace(IDENTITY_MASK, &g.identity_term);
            fill_slurs(&with_identity, g)?
        }
        None => template.to_string(),
    };
    if filled.contains(IDENTITY_MASK) || filled.contains(SLUR_MASK) {
        return Err(TemplateError::ResidualMask { text: filled });
    }
    Ok(filled)
}

fn fill_slurs(text: &str, group: &TargetGroup) -> Result<String, TemplateError> {
    if !text.contains(SLUR_MASK) {
        return Ok(text.to_string());
    }
    if group.slurs.is_empty() {
        return Err(TemplateError::NoSlurs(group.name.clone()));
    }
    let mut out = String::with_capacity(text.len());
    let mut slurs = group.slurs.iter().cycle();
    let mut pieces = text.split(SLUR_MASK);
    out.push_str(pieces.next().unwrap_or_default());
    for piece in pieces {
        out.push_str(slurs.next().expect("cycle over non-empty list"));
        out.push_str(piece);
    }
    Ok(out)
}

/// Final instruction text for one (functionality, group) cell.
pub fn instantiate_instruction(
    f: &Functionality,
    group: Option<&TargetGroup>,
) -> Result<String, TemplateError> {
    check_group(f, group)?;
    fill_masks(&f.instruction_segment, group)
}

pub(crate) fn check_group(
    f: &Functionality,
    group: Option<&TargetGroup>,
) -> Result<(), TemplateError> {
    match (f.targets_protected_group, group) {
        (true, None) => Err(TemplateError::GroupRequired(f.id)),
        (false, Some(_)) => Err(TemplateError::GroupNotAllowed(f.id)),
        (_, Some(g)) if f.requires_slurs && g.slurs.is_empty() => {
            Err(TemplateError::NoSlurs(g.name.clone()))
        }
        _ => Ok(()),
    }
}
