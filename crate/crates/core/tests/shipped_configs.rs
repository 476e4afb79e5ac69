//! The config and template shipped under `configs/` must stay loadable,
//! clash-consistent, and renderable end to end.

use std::path::Path;

use identikit::attrs::{
    assemble_prompt, has_errors, sample_profiles, validate_config, AttributeConfig,
    PromptTemplate,
};
use identikit::llm::mentions_all_attributes;

fn config_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn shipped_config() -> AttributeConfig {
    AttributeConfig::load(&config_path("default_attributes.json")).expect("config loads")
}

fn shipped_template() -> String {
    std::fs::read_to_string(config_path("prompt_template.txt")).expect("template reads")
}

#[test]
fn shipped_config_validates_cleanly() {
    let config = shipped_config();
    let findings = validate_config(&config);
    assert!(
        !has_errors(&findings),
        "shipped config has errors: {findings:?}"
    );
    assert!(
        findings.is_empty(),
        "shipped config should not even warn: {findings:?}"
    );
    assert_eq!(config.classes.len(), 14);
}

#[test]
fn shipped_template_covers_every_class_exactly_once() {
    let config = shipped_config();
    let template = PromptTemplate::parse(&shipped_template()).expect("template parses");
    template.check_classes(&config).expect("placeholders known");
    let class_names: std::collections::BTreeSet<String> =
        config.classes.iter().map(|c| c.name.clone()).collect();
    assert_eq!(template.placeholders(), class_names);
}

#[test]
fn sampling_with_shipped_config_behaves() {
    let config = shipped_config();
    let template = shipped_template();
    let profiles = sample_profiles(&config, 4000, 7).expect("sampling succeeds");

    let mut female = 0usize;
    for profile in &profiles {
        // The three always-on classes really are always on.
        for mandatory in ["gender", "age", "region_of_origin"] {
            assert!(
                profile.selections.contains_key(mandatory),
                "profile {} lacks {mandatory}",
                profile.id
            );
        }
        // Clash rules hold: bald heads get no hair color, female profiles
        // get no facial hair.
        if profile.selections.get("hairstyle").map(String::as_str) == Some("bald") {
            assert!(
                !profile.selections.contains_key("hair_color"),
                "profile {} is bald but has a hair color",
                profile.id
            );
        }
        if profile.selections.get("gender").map(String::as_str) == Some("female") {
            assert!(
                !profile.selections.contains_key("facial_hair"),
                "profile {} is female but has facial hair",
                profile.id
            );
            female += 1;
        }
        assert!(profile.unsatisfiable.is_empty());

        // The template renders and loses no selected attribute.
        let prompt = assemble_prompt(profile, &template, &config).expect("prompt renders");
        let mut with_prompt = profile.clone();
        with_prompt.prompt = prompt.clone();
        assert!(
            mentions_all_attributes(&prompt, &with_prompt),
            "prompt for {} drops an attribute: {prompt}",
            profile.id
        );
    }

    // 49% configured female share; 4000 samples → 3σ ≈ 0.024.
    let share = female as f64 / profiles.len() as f64;
    assert!(
        (share - 0.49).abs() < 0.03,
        "female share {share} far from 0.49"
    );
}
