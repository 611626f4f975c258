//! Subcommand implementations and the helpers they share.

pub mod describe;
pub mod eval;
pub mod gen_data;
pub mod indicate;
pub mod refine_plan;
pub mod simulate;
pub mod train;

use std::path::Path;

use shocknet_core::basis::NodeFamily;
use shocknet_core::dgsem::FluxKind;
use shocknet_core::indicators::{JumpIndicator, ModalIndicator};
use shocknet_nn::hed::SideKernel;
use shocknet_nn::infer::{AnnsiFlagger, AnnslLocalizer};
use shocknet_nn::loss::WeightConvention;

use crate::error::CliError;

pub fn parse_family(s: &str) -> Result<NodeFamily, CliError> {
    match s {
        "gauss" => Ok(NodeFamily::Gauss),
        "equispaced" | "equi" => Ok(NodeFamily::Equispaced),
        other => Err(CliError::usage(format!(
            "unknown node family '{other}' (expected gauss or equispaced)"
        ))),
    }
}

pub fn family_name(f: NodeFamily) -> &'static str {
    match f {
        NodeFamily::Gauss => "gauss",
        NodeFamily::Equispaced => "equispaced",
    }
}

pub fn parse_flux(s: &str) -> Result<FluxKind, CliError> {
    match s {
        "roe" => Ok(FluxKind::Roe { entropy_fix: true }),
        "hlle" => Ok(FluxKind::Hlle),
        other => Err(CliError::usage(format!(
            "unknown flux '{other}' (expected roe or hlle)"
        ))),
    }
}

pub fn flux_name(f: FluxKind) -> &'static str {
    match f {
        FluxKind::Roe { .. } => "roe",
        FluxKind::Hlle => "hlle",
    }
}

pub fn parse_side_kernel(s: &str) -> Result<SideKernel, CliError> {
    match s {
        "k1" => Ok(SideKernel::K1),
        "k3" => Ok(SideKernel::K3),
        other => Err(CliError::usage(format!(
            "unknown side kernel '{other}' (expected k1 or k3)"
        ))),
    }
}

pub fn side_kernel_name(k: SideKernel) -> &'static str {
    match k {
        SideKernel::K1 => "k1",
        SideKernel::K3 => "k3",
    }
}

pub fn parse_convention(s: &str) -> Result<WeightConvention, CliError> {
    match s {
        "edge-weighted" => Ok(WeightConvention::EdgeWeighted),
        "class-balanced" => Ok(WeightConvention::ClassBalanced),
        other => Err(CliError::usage(format!(
            "unknown loss weight convention '{other}' (expected edge-weighted or class-balanced)"
        ))),
    }
}

/// Which element flagger drives DG/FV switching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndicatorChoice {
    None,
    Modal,
    Jump,
    Neural,
}

impl IndicatorChoice {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "none" => Ok(IndicatorChoice::None),
            "modal" => Ok(IndicatorChoice::Modal),
            "jump" => Ok(IndicatorChoice::Jump),
            "neural" => Ok(IndicatorChoice::Neural),
            other => Err(CliError::usage(format!(
                "unknown indicator '{other}' (expected none, modal, jump or neural)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IndicatorChoice::None => "none",
            IndicatorChoice::Modal => "modal",
            IndicatorChoice::Jump => "jump",
            IndicatorChoice::Neural => "neural",
        }
    }
}

/// Standard hysteresis thresholds of a classical indicator choice.
pub fn standard_thresholds(choice: IndicatorChoice) -> Option<(f64, f64)> {
    match choice {
        IndicatorChoice::Modal => {
            let m = ModalIndicator::standard();
            Some((m.upper, m.lower))
        }
        IndicatorChoice::Jump => {
            let j = JumpIndicator::standard();
            Some((j.upper, j.lower))
        }
        _ => None,
    }
}

/// Load an element-flagger checkpoint and check it against the run degree.
pub fn load_annsi(path: &Path, degree: usize) -> Result<AnnsiFlagger, CliError> {
    let flagger = AnnsiFlagger::from_checkpoint(path)
        .map_err(|e| CliError::usage(format!("element flagger checkpoint {}: {e}", path.display())))?;
    if flagger.degree() != degree {
        return Err(CliError::usage(format!(
            "element flagger checkpoint {} is for degree {}, but this run uses degree {degree}",
            path.display(),
            flagger.degree()
        )));
    }
    Ok(flagger)
}

/// Load a shock-localizer checkpoint and check it against the run degree.
pub fn load_annsl(path: &Path, degree: usize) -> Result<AnnslLocalizer, CliError> {
    let localizer = AnnslLocalizer::from_checkpoint(path)
        .map_err(|e| CliError::usage(format!("shock localizer checkpoint {}: {e}", path.display())))?;
    if localizer.degree() != degree {
        return Err(CliError::usage(format!(
            "shock localizer checkpoint {} is for degree {}, but this run uses degree {degree}",
            path.display(),
            localizer.degree()
        )));
    }
    Ok(localizer)
}

/// Create an output directory (and parents) before a command starts writing.
pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::runtime(format!("cannot create output directory {}: {e}", path.display())))
}

/// Short descriptions of the seven synthetic function families, index 0
/// holding family 1.
pub const FAMILY_NAMES: [&str; 7] = [
    "linear",
    "trigonometric",
    "gaussians",
    "sectors",
    "ridge",
    "ramps",
    "oscillation",
];
