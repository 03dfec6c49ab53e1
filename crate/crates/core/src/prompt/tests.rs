use proptest::prelude::*;

use super::*;
use crate::dissolution::DrugSubstance;
use crate::profile::{render_profile_json, DissolutionProfile};
use crate::record::{records_from_json, FormulationInput};

const ZS_GOLDEN: &str = include_str!("../../../../fixtures/prompts/zs_reference.txt");
const FS_GOLDEN: &str = include_str!("../../../../fixtures/prompts/fs_reference.txt");
const EXEMPLAR_BLOCK: &str = include_str!("../../../../fixtures/prompts/exemplar_blocks.txt");
const EXEMPLAR_RECORDS: &str = include_str!("../../../../fixtures/exemplar_records.json");

fn reference_input() -> FormulationInput {
    FormulationInput {
        d50: 97.5,
        aspect_ratio: 1.0,
        roundness: 1.0,
        solubility: 0.45,
        diffusivity: 7.5e-10,
        true_density: 1.512,
        ssa: 1.07,
        vol_eq_size: 1.85,
    }
}

fn reference_output() -> Vec<(f64, f64)> {
    vec![
        (0.0, 0.0),
        (0.25, 85.0),
        (0.5, 87.0),
        (0.75, 88.0),
        (1.0, 89.0),
        (2.0, 89.0),
        (3.0, 89.0),
        (4.0, 88.0),
        (5.0, 87.0),
        (6.0, 87.0),
    ]
}

fn build(strategy: PromptStrategy, examples: &[crate::record::FormulationRecord]) -> PromptBundle {
    build_prompt(strategy, &reference_input(), examples, &Constraints::default()).unwrap()
}

#[test]
fn zero_shot_matches_golden() {
    let zs = build(PromptStrategy::Zs, &[]);
    assert_eq!(zs.rendered, ZS_GOLDEN);
    assert!(zs.rendered.contains("Final dissolution ≥85% within 60 min"));
    assert!(zs.rendered.contains("no examples provided"));
}

#[test]
fn few_shot_matches_golden_and_embeds_examples() {
    let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
    let fs = build(PromptStrategy::Fs, &records);
    assert_eq!(fs.rendered, FS_GOLDEN);
    for block in EXEMPLAR_BLOCK.split("### Example").skip(1) {
        assert!(fs.rendered.contains(&format!("### Example{block}")));
    }
}

#[test]
fn section_order_and_headers() {
    let zs = build(PromptStrategy::Zs, &[]);
    let kinds: Vec<SectionKind> = zs.sections.iter().map(|s| s.kind).collect();
    assert_eq!(
        kinds,
        vec![
            SectionKind::Role,
            SectionKind::Background,
            SectionKind::Request,
            SectionKind::InputFormat,
            SectionKind::OutputFormat,
            SectionKind::Examples,
            SectionKind::Constraints
        ]
    );
    let mut last = 0;
    for s in &zs.sections {
        let at = zs.rendered.find(&s.header).unwrap();
        assert!(at >= last);
        last = at;
    }
}

#[test]
fn cot_adds_exactly_one_line() {
    let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
    for (base, cot) in [(PromptStrategy::Zs, PromptStrategy::ZsCot), (PromptStrategy::Fs, PromptStrategy::FsCot)] {
        let a = build(base, &records).rendered;
        let b = build(cot, &records).rendered;
        let extra = b.strip_prefix(a.as_str()).unwrap();
        assert_eq!(extra, "Do the step-by-step analysis\n");
        assert_eq!(b.lines().count(), a.lines().count() + 1);
    }
}

#[test]
fn example_strategies_need_examples() {
    for s in [PromptStrategy::Fs, PromptStrategy::FsCot, PromptStrategy::Rag] {
        assert_eq!(
            build_prompt(s, &reference_input(), &[], &Constraints::default()),
            Err(PromptError::MissingExamples(s))
        );
    }
    let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
    let zs = build(PromptStrategy::Zs, &records);
    assert_eq!(zs.section(SectionKind::Examples).unwrap().body, "no examples provided");
    let rag = build(PromptStrategy::Rag, &records[..1]);
    let body = &rag.section(SectionKind::Examples).unwrap().body;
    assert!(body.starts_with("### Retrieved Examples ###\n### Example1: ###"));
    assert!(!body.contains("Example2"));
}

#[test]
fn extra_constraints_are_numbered_after_defaults() {
    let c = Constraints::with_extra(["Keep D50 below 150 micrometer."]);
    let text = c.render();
    assert!(text.starts_with("1. Nernst-Brunner equation = {"));
    assert!(text.contains("\n2. Final dissolution ≥85% within 60 min (USP compliance).\n"));
    assert!(text.ends_with("\n6. Keep D50 below 150 micrometer."));
}

#[test]
fn strategy_labels_round_trip() {
    let labels: Vec<&str> = PromptStrategy::ALL.iter().map(|s| s.label()).collect();
    assert_eq!(labels, ["ZS", "ZS_CoT", "FS", "FS_CoT", "RAG"]);
    for s in PromptStrategy::ALL {
        assert_eq!(s.label().parse::<PromptStrategy>().unwrap(), s);
        assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.label()));
    }
    assert_eq!("zs-cot".parse::<PromptStrategy>().unwrap(), PromptStrategy::ZsCot);
    assert!("tot".parse::<PromptStrategy>().is_err());
}

#[test]
fn input_section_round_trips() {
    let zs = build(PromptStrategy::Zs, &[]);
    assert_eq!(extract_input(&zs.rendered).unwrap(), reference_input());
}

#[test]
fn inverse_prompt_embeds_target() {
    let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
    let target = &records[1].profile;
    let drug = DrugSubstance::hydrochlorothiazide();
    let inv = build_inverse_prompt(PromptStrategy::Zs, target, &drug, &[], &Constraints::default()).unwrap();
    let input = &inv.section(SectionKind::InputFormat).unwrap().body;
    for (t, r) in [(0.25, 12), (0.5, 20), (0.75, 28), (1.0, 35), (2.0, 52), (3.0, 63), (4.0, 71), (5.0, 75), (6.0, 82)] {
        assert!(input.contains(&format!("[{t}, {r}]")), "{t}");
    }
    assert!(input.contains("\"solubility of drug (mg/mL)\" : 0.45,"));
    let parsed = parse_profile_response(&inv.rendered[inv.rendered.find("Target = ").unwrap()..]).unwrap();
    assert_eq!(&parsed.profile, target);
    let output = &inv.section(SectionKind::OutputFormat).unwrap().body;
    for f in crate::record::Feature::ALL {
        assert!(output.contains(f.prompt_key()));
    }
    let cot = build_inverse_prompt(PromptStrategy::ZsCot, target, &drug, &[], &Constraints::default()).unwrap();
    assert_eq!(cot.rendered, format!("{}Do the step-by-step analysis\n", inv.rendered));
    let lonely = DissolutionProfile::from_pairs(&[(0.0, 0.0)]).unwrap();
    assert_eq!(
        build_inverse_prompt(PromptStrategy::Zs, &lonely, &drug, &[], &Constraints::default()),
        Err(PromptError::EmptyTarget)
    );
}

#[test]
fn parses_output_format_block() {
    let zs = build(PromptStrategy::Zs, &[]);
    let body = &zs.section(SectionKind::OutputFormat).unwrap().body;
    let parsed = parse_profile_response(body).unwrap();
    assert_eq!(parsed.profile, DissolutionProfile::from_pairs(&reference_output()).unwrap());
    assert_eq!(parsed.report.time_unit, TimeUnit::Hours);
    assert!(parsed.report.surrounding_text);
    assert!(!parsed.report.repaired());
}

#[test]
fn fenced_and_prose_variants_parse_identically() {
    let table = render_profile_json(&DissolutionProfile::from_pairs(&reference_output()).unwrap());
    let bare = parse_profile_response(&table).unwrap();
    assert!(!bare.report.surrounding_text && !bare.report.inside_code_fence);
    let fenced = format!("```json\n{table}\n```");
    let prose = format!(
        "Based on the film model the powder dissolves quickly {{roughly}}.\n\n```json\n{table}\n```\n\nThe plateau reflects saturation."
    );
    for text in [fenced, prose] {
        let p = parse_profile_response(&text).unwrap();
        assert_eq!(p.profile, bare.profile);
        assert!(p.report.inside_code_fence);
    }
}

#[test]
fn nested_tables_minutes_and_clamping() {
    let text = r#"{"answer": {"columns": ["Time (min)", "Drug Released (%)"], "data": [[0, 0], [30, "40%"], [15, 20], [60, 104]]}}"#;
    let p = parse_profile_response(text).unwrap();
    assert_eq!(p.profile.times(), vec![0.0, 0.25, 0.5, 1.0]);
    assert_eq!(p.profile.released(), vec![0.0, 20.0, 40.0, 100.0]);
    assert_eq!(p.report.time_unit, TimeUnit::Minutes);
    assert!(p.report.reordered);
    assert_eq!(p.report.clamped.len(), 1);
    assert_eq!(p.report.clamped[0].original, 104.0);
    assert!(p.report.repaired());
    let json = serde_json::to_value(&p.report).unwrap();
    assert_eq!(json["time_unit"], "minutes");
}

#[test]
fn parse_errors() {
    assert_eq!(
        parse_profile_response(r#"{"columns": ["Time (hr)", "Drug Released (%)"], "data": []}"#).unwrap_err(),
        PromptError::EmptyProfile
    );
    assert_eq!(parse_profile_response("no json here").unwrap_err(), PromptError::NoTable);
    assert_eq!(parse_profile_response(r#"{"x": 1}"#).unwrap_err(), PromptError::NoTable);
    assert_eq!(
        parse_profile_response(r#"{"columns": ["Time (hr)", "R"], "data": [[0, 0], [1, 50], [1, 60]]}"#).unwrap_err(),
        PromptError::DuplicateTime { time: 1.0 }
    );
    assert_eq!(
        parse_profile_response(r#"{"columns": ["Time (hr)", "R"], "data": [[0, 0], [1]]}"#).unwrap_err(),
        PromptError::BadRow { index: 1 }
    );
    assert!(PromptError::EmptyProfile.is_parse_failure());
    assert!(!PromptError::EmptyTarget.is_parse_failure());
}

#[test]
fn design_answers() {
    let json_answer = r#"Here is the design:
{
  "Mean Particle Size, D50" : 120,
  "Aspect ratio" : 1.2,
  "Roundness" : 0.9,
  "solubility of drug (mg/mL)" : 0.45,
  "Diffusion coefficient of drug (m^2/s)" : "7.5x 10^(-10)",
  "True Density of drug (g/mL)" : 1.512,
  "Specific surface area (m^2/g)" : 0.5,
  "volume-based equivalent particle size (micrometer)" : 10.0
}"#;
    let d = parse_design_response(json_answer).unwrap();
    assert_eq!(d.d50, 120.0);
    assert_eq!(d.diffusivity, 7.5e-10);
    let block = render_input_block(&reference_input());
    assert_eq!(parse_design_response(&block).unwrap(), reference_input());
    assert!(parse_design_response("{\"d50_um\": 3}").is_err());
}

#[test]
fn validation_rules() {
    let reference_profile = DissolutionProfile::from_pairs(&reference_output()).unwrap();
    assert!(validate_profile(&reference_profile).is_empty());

    let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
    let ex2 = validate_profile(&records[1].profile);
    assert_eq!(ex2.len(), 1);
    assert_eq!((ex2[0].rule, ex2[0].severity), (Rule::UspRelease, Severity::Advisory));
    assert!(!has_fatal(&ex2));

    let offset = DissolutionProfile::from_pairs(&[(0.0, 10.0), (1.0, 90.0)]).unwrap();
    let f = validate_profile(&offset);
    assert_eq!(f[0].rule, Rule::InitialCondition);
    assert!(has_fatal(&f));

    let bumpy = DissolutionProfile::from_pairs(&[(0.0, 0.0), (0.5, 90.0), (1.0, 80.0), (2.0, 120.0)]).unwrap();
    let rules: Vec<Rule> = validate_profile(&bumpy).iter().map(|f| f.rule).collect();
    assert_eq!(rules, vec![Rule::Range, Rule::Decrease]);
}

fn arb_input() -> impl Strategy<Value = FormulationInput> {
    (
        1.0f64..500.0,
        1.0f64..3.0,
        0.1f64..=1.0,
        0.01f64..10.0,
        1e-11f64..1e-8,
        0.5f64..3.0,
        0.01f64..10.0,
        0.5f64..50.0,
    )
        .prop_map(|(d50, ar, ro, s, dif, rho, ssa, veq)| FormulationInput {
            d50,
            aspect_ratio: ar,
            roundness: ro,
            solubility: s,
            diffusivity: dif,
            true_density: rho,
            ssa,
            vol_eq_size: veq,
        })
}

fn arb_profile() -> impl Strategy<Value = DissolutionProfile> {
    prop::collection::vec((0.001f64..2.0, 0.0f64..100.0), 1..15).prop_map(|steps| {
        let mut t = 0.0;
        let mut pts = vec![(0.0, 0.0)];
        for (dt, r) in steps {
            t += dt;
            pts.push((t, r));
        }
        DissolutionProfile::from_pairs(&pts).unwrap()
    })
}

proptest! {
    #[test]
    fn rendering_is_deterministic_and_cot_is_one_line(input in arb_input()) {
        let records = records_from_json(EXEMPLAR_RECORDS).unwrap();
        for s in PromptStrategy::ALL {
            let a = build_prompt(s, &input, &records, &Constraints::default()).unwrap();
            let b = build_prompt(s, &input, &records, &Constraints::default()).unwrap();
            prop_assert_eq!(&a.rendered, &b.rendered);
            if s.is_cot() {
                let base = build_prompt(s.base(), &input, &records, &Constraints::default()).unwrap();
                prop_assert_eq!(a.rendered, format!("{}Do the step-by-step analysis\n", base.rendered));
            }
        }
        let zs = build_prompt(PromptStrategy::Zs, &input, &[], &Constraints::default()).unwrap();
        prop_assert_eq!(extract_input(&zs.rendered).unwrap(), input);
    }

    #[test]
    fn rendered_profiles_parse_back_exactly(profile in arb_profile()) {
        let parsed = parse_profile_response(&render_profile_json(&profile)).unwrap();
        prop_assert_eq!(parsed.profile, profile);
        prop_assert!(!parsed.report.repaired());
    }
}
