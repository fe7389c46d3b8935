//! Statistics-first narration and annotation-document assembly.
//!
//! Prompts always open with the serialized zone statistics so generated text
//! stays grounded in the counts. The default backend assembles deterministic
//! template sentences; any backend's output is validated to contain every
//! nonzero count from its prompt before it enters a document.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::grading::{assess, DamageAssessment, GradingMode};
use crate::instances::{BuildingInstance, Connectivity};
use crate::mask::{CategoryCounts, DamageCategory, SegmentationMask};
use crate::stats::{BuildingCounts, Scope, ZonalStatistics, ZoneStats};
use crate::zones::Zone;

/// Document schema version stamped into every annotation.
pub const SCHEMA_VERSION: &str = "1.0";
/// Prompt template version stamped into document metadata.
pub const PROMPT_VERSION: &str = "1";

/// Errors from narration and document compilation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NarrationError {
    #[error("{backend} backend failed: {message}")]
    Backend { backend: String, message: String },
    #[error("generated text for the {scope} scope omits required counts {missing:?}")]
    MissingCounts { scope: String, missing: Vec<u64> },
    #[error("{section} mentions {value}, which is absent from the statistics tables")]
    UngroundedInteger { section: String, value: u64 },
    #[error("instance {id} has no fitted oriented box")]
    MissingBox { id: u32 },
    #[error("instance {id} has no assigned zone")]
    MissingZone { id: u32 },
    #[error("component table disagrees with the instance list in the {zone} zone")]
    InconsistentCounts { zone: &'static str },
    #[error("assessment totals disagree with the statistics tables")]
    InconsistentAssessment,
}

/// A statistics-first generation request for one scope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationPrompt {
    pub stats: ZoneStats,
    pub stats_payload: String,
    pub instruction: String,
}

impl GenerationPrompt {
    pub fn scope(&self) -> Scope {
        self.stats.scope
    }

    /// Full prompt text: the statistics block first, then the instruction.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.stats_payload, self.instruction)
    }
}

fn default_instruction(scope: Scope) -> &'static str {
    match scope {
        Scope::Global => {
            "Summarize the building damage across the whole scene in two or three \
             sentences, stating every building count and pixel count from the \
             statistics block explicitly."
        }
        Scope::Zone(_) => {
            "Describe the building damage situation in this zone in two or three \
             sentences, stating every building count and pixel count from the \
             statistics block explicitly."
        }
    }
}

/// Builds the prompt for one scope. The payload serializes every count
/// verbatim; an empty instruction falls back to the fixed default.
pub fn build_prompt(stats: &ZoneStats, instruction: &str) -> GenerationPrompt {
    let mut payload = format!("zone: {}\n", stats.scope.name());
    for category in DamageCategory::BUILDING {
        payload.push_str(&format!(
            "{}: {} buildings ({} px)\n",
            category.name(),
            stats.instance_counts.get(category),
            stats.pixel_counts.get(category),
        ));
    }
    let instruction = if instruction.trim().is_empty() {
        default_instruction(stats.scope).to_string()
    } else {
        instruction.to_string()
    };
    GenerationPrompt { stats: *stats, stats_payload: payload, instruction }
}

/// Text generator behind the narration phase.
pub trait TextBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, prompt: &GenerationPrompt) -> Result<String, NarrationError>;
}

/// Deterministic sentence templates keyed to counts and the zone-level grade.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateBackend {
    pub grading_mode: GradingMode,
}

impl TemplateBackend {
    pub fn new(grading_mode: GradingMode) -> Self {
        Self { grading_mode }
    }
}

impl TextBackend for TemplateBackend {
    fn name(&self) -> &str {
        "template"
    }

    fn generate(&self, prompt: &GenerationPrompt) -> Result<String, NarrationError> {
        Ok(template_description(&prompt.stats, self.grading_mode))
    }
}

fn subject(scope: Scope) -> &'static str {
    match scope {
        Scope::Global => "The scene",
        Scope::Zone(Zone::Top) => "The top zone",
        Scope::Zone(Zone::Central) => "The central zone",
        Scope::Zone(Zone::Bottom) => "The bottom zone",
        Scope::Zone(Zone::Left) => "The left zone",
        Scope::Zone(Zone::Right) => "The right zone",
    }
}

fn join_phrases(phrases: &[String]) -> String {
    match phrases.len() {
        0 => String::new(),
        1 => phrases[0].clone(),
        n => format!("{} and {}", phrases[..n - 1].join(", "), phrases[n - 1]),
    }
}

fn plural(n: u64) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

/// Template text for one scope's statistics.
fn template_description(stats: &ZoneStats, mode: GradingMode) -> String {
    let subject = subject(stats.scope);
    let mut with_instances = Vec::new();
    let mut pixel_only = Vec::new();
    for category in DamageCategory::BUILDING {
        let instances = stats.instance_counts.get(category);
        let pixels = stats.pixel_counts.get(category);
        if instances > 0 {
            with_instances.push(format!(
                "{} {} building{} ({} px)",
                instances,
                category.name(),
                plural(instances),
                pixels
            ));
        } else if pixels > 0 {
            pixel_only.push(format!("{} px of {} footprint", pixels, category.name()));
        }
    }

    if with_instances.is_empty() && pixel_only.is_empty() {
        return format!("{subject} contains no building structures.");
    }
    if with_instances.is_empty() {
        return format!(
            "{subject} contains no assigned building structures, aside from {} extending in from neighboring zones.",
            join_phrases(&pixel_only)
        );
    }

    let grade = assess(&stats.pixel_counts, mode);
    let lead = match grade.level {
        0 => format!("{subject} appears largely unaffected, containing "),
        1 => format!("{subject} shows isolated damage: "),
        2 => format!("{subject} shows moderate structural damage: "),
        3 => format!("{subject} is severely affected: "),
        _ => format!("{subject} exhibits widespread devastation: "),
    };
    let spillover = if pixel_only.is_empty() {
        String::new()
    } else {
        format!(
            ", plus {} extending in from neighboring zones",
            join_phrases(&pixel_only)
        )
    };
    format!("{lead}{}{spillover}.", join_phrases(&with_instances))
}

/// All base-10 integers appearing in `text`, in order of appearance.
/// Digit runs too long for `u64` come back as `u64::MAX`.
pub fn extract_integers(text: &str) -> Vec<u64> {
    let mut values = Vec::new();
    let mut current: Option<u64> = None;
    let mut overflowed = false;
    for c in text.chars() {
        if let Some(d) = c.to_digit(10) {
            if overflowed {
                continue;
            }
            let next = current
                .unwrap_or(0)
                .checked_mul(10)
                .and_then(|x| x.checked_add(d as u64));
            match next {
                Some(v) => current = Some(v),
                None => {
                    overflowed = true;
                    current = Some(u64::MAX);
                }
            }
        } else {
            if let Some(v) = current.take() {
                values.push(v);
            }
            overflowed = false;
        }
    }
    if let Some(v) = current {
        values.push(v);
    }
    values
}

/// Runs the backend and enforces the statistics-first contract: every
/// nonzero count from the prompt must appear in the output as a literal
/// integer.
pub fn generate_description(
    prompt: &GenerationPrompt,
    backend: &dyn TextBackend,
) -> Result<String, NarrationError> {
    let text = backend.generate(prompt)?;
    let found = extract_integers(&text);
    let mut missing = Vec::new();
    for category in DamageCategory::BUILDING {
        for count in [
            prompt.stats.instance_counts.get(category),
            prompt.stats.pixel_counts.get(category),
        ] {
            if count > 0 && !found.contains(&count) && !missing.contains(&count) {
                missing.push(count);
            }
        }
    }
    if missing.is_empty() {
        Ok(text)
    } else {
        Err(NarrationError::MissingCounts {
            scope: prompt.stats.scope.name().to_string(),
            missing,
        })
    }
}

/// Converts the component tables into natural-language quantifiers: one
/// sentence per category plus per-zone breakdowns for nonzero zones.
pub fn compile_counting(zonal: &ZonalStatistics) -> String {
    if zonal.global.instance_counts.total() == 0 {
        return "No building structures detected.".to_string();
    }
    let mut sentences = Vec::new();
    for category in DamageCategory::BUILDING {
        let total = zonal.global.instance_counts.get(category);
        if total == 0 {
            sentences.push(format!("No {} buildings were detected.", category.name()));
            continue;
        }
        let breakdown: Vec<String> = Zone::ALL
            .iter()
            .filter_map(|&zone| {
                let count = zonal.zone(zone).instance_counts.get(category);
                (count > 0).then(|| format!("{} in the {} zone", count, zone.name()))
            })
            .collect();
        sentences.push(format!(
            "There {} {} {} building{} in total: {}.",
            if total == 1 { "is" } else { "are" },
            total,
            category.name(),
            plural(total),
            breakdown.join(", "),
        ));
    }
    sentences.join(" ")
}

/// Holistic scene summary keyed to the graded level.
pub fn compile_summary(zonal: &ZonalStatistics, assessment: &DamageAssessment) -> String {
    format!(
        "Damage level {} ({}): the scene contains {} intact, {} damaged, and {} destroyed \
         buildings. Destruction ratio {:.4}, overall damage ratio {:.4}.",
        assessment.level,
        assessment.name,
        zonal.global.instance_counts.intact,
        zonal.global.instance_counts.damaged,
        zonal.global.instance_counts.destroyed,
        assessment.rho_dest,
        assessment.rho_dam,
    )
}

/// Per-zone instance counts plus the five-zone total row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ComponentTable {
    pub top: BuildingCounts,
    pub central: BuildingCounts,
    pub bottom: BuildingCounts,
    pub left: BuildingCounts,
    pub right: BuildingCounts,
    pub total: BuildingCounts,
}

impl ComponentTable {
    fn from_stats(zonal: &ZonalStatistics) -> Self {
        Self {
            top: zonal.zone(Zone::Top).instance_counts,
            central: zonal.zone(Zone::Central).instance_counts,
            bottom: zonal.zone(Zone::Bottom).instance_counts,
            left: zonal.zone(Zone::Left).instance_counts,
            right: zonal.zone(Zone::Right).instance_counts,
            total: zonal.global.instance_counts,
        }
    }

    pub fn get(&self, zone: Zone) -> &BuildingCounts {
        match zone {
            Zone::Top => &self.top,
            Zone::Central => &self.central,
            Zone::Bottom => &self.bottom,
            Zone::Left => &self.left,
            Zone::Right => &self.right,
        }
    }

    fn values(&self) -> Vec<u64> {
        let mut values = Vec::new();
        for row in [&self.top, &self.central, &self.bottom, &self.left, &self.right, &self.total] {
            values.extend_from_slice(&[row.intact, row.damaged, row.destroyed]);
        }
        values
    }
}

/// Per-zone pixel counts plus the five-zone total row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PixelTable {
    pub top: CategoryCounts,
    pub central: CategoryCounts,
    pub bottom: CategoryCounts,
    pub left: CategoryCounts,
    pub right: CategoryCounts,
    pub total: CategoryCounts,
}

impl PixelTable {
    fn from_stats(zonal: &ZonalStatistics) -> Self {
        Self {
            top: zonal.zone(Zone::Top).pixel_counts,
            central: zonal.zone(Zone::Central).pixel_counts,
            bottom: zonal.zone(Zone::Bottom).pixel_counts,
            left: zonal.zone(Zone::Left).pixel_counts,
            right: zonal.zone(Zone::Right).pixel_counts,
            total: zonal.global.pixel_counts,
        }
    }
}

/// One generated description per zone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ZoneDescriptions {
    pub top: String,
    pub central: String,
    pub bottom: String,
    pub left: String,
    pub right: String,
}

impl ZoneDescriptions {
    pub fn get(&self, zone: Zone) -> &str {
        match zone {
            Zone::Top => &self.top,
            Zone::Central => &self.central,
            Zone::Bottom => &self.bottom,
            Zone::Left => &self.left,
            Zone::Right => &self.right,
        }
    }

    pub fn set(&mut self, zone: Zone, text: String) {
        match zone {
            Zone::Top => self.top = text,
            Zone::Central => self.central = text,
            Zone::Bottom => self.bottom = text,
            Zone::Left => self.left = text,
            Zone::Right => self.right = text,
        }
    }
}

/// Zone-level grades, an extra view beside the scene-level evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZoneEvaluations {
    pub top: DamageAssessment,
    pub central: DamageAssessment,
    pub bottom: DamageAssessment,
    pub left: DamageAssessment,
    pub right: DamageAssessment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DocumentMetadata {
    pub image_id: String,
    pub height: u32,
    pub width: u32,
    pub connectivity: u8,
    pub grading_mode: GradingMode,
    pub backend: String,
    pub prompt_version: &'static str,
    pub tool_version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantitativeSection {
    pub component_table: ComponentTable,
    pub pixel_table: PixelTable,
    pub obb_records: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemanticSection {
    pub zone_descriptions: ZoneDescriptions,
    pub counting: String,
    pub summary: String,
    pub evaluation: DamageAssessment,
    pub zone_evaluations: ZoneEvaluations,
}

/// The compiled hierarchical annotation for one mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationDocument {
    pub schema_version: &'static str,
    pub metadata: DocumentMetadata,
    pub quantitative: QuantitativeSection,
    pub semantic: SemanticSection,
}

/// Everything [`compile_annotation`] needs, all derived from the same mask.
pub struct AnnotationInputs<'a> {
    pub image_id: &'a str,
    pub connectivity: Connectivity,
    pub grading_mode: GradingMode,
    pub backend_name: &'a str,
    pub mask: &'a SegmentationMask,
    pub instances: &'a [BuildingInstance],
    pub zonal: &'a ZonalStatistics,
    pub assessment: &'a DamageAssessment,
    pub descriptions: ZoneDescriptions,
}

/// Assembles and cross-validates the annotation document.
///
/// Instance tallies are recomputed from the instance list and must match the
/// statistics tables; counting text (and, for the template backend, zone
/// descriptions) must not mention integers outside those tables.
pub fn compile_annotation(inputs: AnnotationInputs) -> Result<AnnotationDocument, NarrationError> {
    let zonal = inputs.zonal;

    // Cross-input consistency: retally instances against the tables.
    let mut tallies: [BuildingCounts; 5] = [BuildingCounts::default(); 5];
    for instance in inputs.instances {
        let zone = instance.zone.ok_or(NarrationError::MissingZone { id: instance.id })?;
        let slot = Zone::ALL.iter().position(|&z| z == zone).unwrap();
        tallies[slot].add(instance.category, 1);
    }
    for (i, &zone) in Zone::ALL.iter().enumerate() {
        if tallies[i] != zonal.zone(zone).instance_counts {
            return Err(NarrationError::InconsistentCounts { zone: zone.name() });
        }
    }
    if inputs.assessment.n_total != zonal.global.pixel_counts.building_total()
        || inputs.assessment.n_damaged != zonal.global.pixel_counts.damaged
        || inputs.assessment.n_destroyed != zonal.global.pixel_counts.destroyed
    {
        return Err(NarrationError::InconsistentAssessment);
    }

    let mut obb_records = Vec::with_capacity(inputs.instances.len());
    for instance in inputs.instances {
        let record = instance
            .yolo_record(inputs.mask.height(), inputs.mask.width())
            .ok_or(NarrationError::MissingBox { id: instance.id })?;
        obb_records.push(record);
    }

    let component_table = ComponentTable::from_stats(zonal);
    let pixel_table = PixelTable::from_stats(zonal);
    let counting = compile_counting(zonal);
    let summary = compile_summary(zonal, inputs.assessment);

    // Groundedness: counting text only mentions component-table numbers.
    let component_values = component_table.values();
    for value in extract_integers(&counting) {
        if !component_values.contains(&value) {
            return Err(NarrationError::UngroundedInteger {
                section: "counting text".to_string(),
                value,
            });
        }
    }
    // Template descriptions only mention that zone's table numbers.
    if inputs.backend_name == "template" {
        for zone in Zone::ALL {
            let stats = zonal.zone(zone);
            let mut allowed: Vec<u64> = Vec::new();
            for category in DamageCategory::ALL {
                allowed.push(stats.pixel_counts.get(category));
            }
            for category in DamageCategory::BUILDING {
                allowed.push(stats.instance_counts.get(category));
            }
            for value in extract_integers(inputs.descriptions.get(zone)) {
                if !allowed.contains(&value) {
                    return Err(NarrationError::UngroundedInteger {
                        section: format!("{} zone description", zone.name()),
                        value,
                    });
                }
            }
        }
    }

    let assess_zone = |zone: Zone| assess(&zonal.zone(zone).pixel_counts, inputs.grading_mode);
    let zone_evaluations = ZoneEvaluations {
        top: assess_zone(Zone::Top),
        central: assess_zone(Zone::Central),
        bottom: assess_zone(Zone::Bottom),
        left: assess_zone(Zone::Left),
        right: assess_zone(Zone::Right),
    };

    Ok(AnnotationDocument {
        schema_version: SCHEMA_VERSION,
        metadata: DocumentMetadata {
            image_id: inputs.image_id.to_string(),
            height: inputs.mask.height(),
            width: inputs.mask.width(),
            connectivity: inputs.connectivity.as_u8(),
            grading_mode: inputs.grading_mode,
            backend: inputs.backend_name.to_string(),
            prompt_version: PROMPT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
        },
        quantitative: QuantitativeSection { component_table, pixel_table, obb_records },
        semantic: SemanticSection {
            zone_descriptions: inputs.descriptions,
            counting,
            summary,
            evaluation: *inputs.assessment,
            zone_evaluations,
        },
    })
}
