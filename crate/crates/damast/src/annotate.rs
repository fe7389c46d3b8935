//! Single-mask annotation with optional concurrent zone generation.

use damast_core::narration::{
    build_prompt, generate_description, AnnotationDocument, NarrationError, TextBackend,
    ZoneDescriptions,
};
use damast_core::pipeline::{analyze_mask, compile_with_descriptions, AnnotateOptions, PipelineError};
use damast_core::mask::SegmentationMask;
use damast_core::zones::Zone;

/// Annotates one mask. With `concurrent_zones` the five zone descriptions are
/// generated on one thread each (so at most five backend calls are in
/// flight); assembly order is fixed either way, keeping output deterministic.
pub fn annotate_one(
    mask: &SegmentationMask,
    options: &AnnotateOptions,
    backend: &dyn TextBackend,
    concurrent_zones: bool,
) -> Result<AnnotationDocument, PipelineError> {
    let analysis = analyze_mask(mask, options.connectivity)?;

    let mut descriptions = ZoneDescriptions::default();
    if concurrent_zones {
        let results: [Result<String, NarrationError>; 5] = std::thread::scope(|scope| {
            let handles = Zone::ALL.map(|zone| {
                let stats = *analysis.zonal.zone(zone);
                let instruction = options.instruction.clone();
                scope.spawn(move || {
                    let prompt = build_prompt(&stats, &instruction);
                    generate_description(&prompt, backend)
                })
            });
            handles.map(|h| h.join().expect("zone generation thread panicked"))
        });
        for (zone, result) in Zone::ALL.into_iter().zip(results) {
            descriptions.set(zone, result?);
        }
    } else {
        for zone in Zone::ALL {
            let prompt = build_prompt(analysis.zonal.zone(zone), &options.instruction);
            descriptions.set(zone, generate_description(&prompt, backend)?);
        }
    }

    compile_with_descriptions(mask, &analysis, options, backend.name(), descriptions)
}
