//! Single-mask annotation pipeline: extract, analyze, grade, narrate, compile.

use alloc::string::String;
use alloc::vec::Vec;

use crate::grading::{assess, GradingMode};
use crate::instances::{extract_instances, fit_obb, BuildingInstance, Connectivity};
use crate::mask::SegmentationMask;
use crate::narration::{
    build_prompt, compile_annotation, generate_description, AnnotationDocument, AnnotationInputs,
    NarrationError, TextBackend, ZoneDescriptions,
};
use crate::stats::{compute_zone_stats, StatsError, ZonalStatistics};
use crate::zones::{Zone, ZoneError, ZoneGeometry};

/// Errors from the end-to-end pipeline.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Zone(#[from] ZoneError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Narration(#[from] NarrationError),
}

/// Pipeline knobs for one mask.
#[derive(Debug, Clone)]
pub struct AnnotateOptions {
    pub image_id: String,
    pub connectivity: Connectivity,
    pub grading_mode: GradingMode,
    /// Custom zone instruction; empty selects the fixed default.
    pub instruction: String,
}

impl AnnotateOptions {
    pub fn new(image_id: impl Into<String>) -> Self {
        Self {
            image_id: image_id.into(),
            connectivity: Connectivity::default(),
            grading_mode: GradingMode::default(),
            instruction: String::new(),
        }
    }
}

/// Geometric and statistical analysis of one mask.
#[derive(Debug, Clone)]
pub struct MaskAnalysis {
    pub geometry: ZoneGeometry,
    pub instances: Vec<BuildingInstance>,
    pub zonal: ZonalStatistics,
}

/// Extracts instances, assigns zones, fits boxes, and tallies statistics.
pub fn analyze_mask(
    mask: &SegmentationMask,
    connectivity: Connectivity,
) -> Result<MaskAnalysis, PipelineError> {
    let geometry = ZoneGeometry::new(mask.height(), mask.width())?;
    let mut instances = extract_instances(mask, connectivity);
    for instance in &mut instances {
        instance.zone = Some(geometry.assign_zone(&instance.pixels)?);
        instance.obb = fit_obb(&instance.pixels);
    }
    let zonal = compute_zone_stats(mask, &instances, &geometry)?;
    Ok(MaskAnalysis { geometry, instances, zonal })
}

/// Full pipeline for one mask with sequential description generation.
pub fn annotate_mask(
    mask: &SegmentationMask,
    options: &AnnotateOptions,
    backend: &dyn TextBackend,
) -> Result<AnnotationDocument, PipelineError> {
    let analysis = analyze_mask(mask, options.connectivity)?;
    let mut descriptions = ZoneDescriptions::default();
    for zone in Zone::ALL {
        let prompt = build_prompt(analysis.zonal.zone(zone), &options.instruction);
        descriptions.set(zone, generate_description(&prompt, backend)?);
    }
    compile_with_descriptions(mask, &analysis, options, backend.name(), descriptions)
}

/// Compiles the document from a prepared analysis and pre-generated zone
/// descriptions (the companion crate uses this for concurrent backends).
pub fn compile_with_descriptions(
    mask: &SegmentationMask,
    analysis: &MaskAnalysis,
    options: &AnnotateOptions,
    backend_name: &str,
    descriptions: ZoneDescriptions,
) -> Result<AnnotationDocument, PipelineError> {
    let assessment = assess(&analysis.zonal.global.pixel_counts, options.grading_mode);
    let document = compile_annotation(AnnotationInputs {
        image_id: &options.image_id,
        connectivity: options.connectivity,
        grading_mode: options.grading_mode,
        backend_name,
        mask,
        instances: &analysis.instances,
        zonal: &analysis.zonal,
        assessment: &assessment,
        descriptions,
    })?;
    Ok(document)
}
