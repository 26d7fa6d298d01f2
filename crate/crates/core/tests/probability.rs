mod common;

use proptest::prelude::*;

use treetackle::gen::corpus_pair;
use treetackle::instance::TidInstance;
use treetackle::lineage::shannon_condition;
use treetackle::pipeline::{build_lineage, run, Determinize, Method, PipelineConfig};
use treetackle::prob::{prob_ddnnf, prob_message_passing, prob_monte_carlo};

fn mp(inst: &TidInstance, q: &treetackle::query::Query) -> f64 {
    let cfg = PipelineConfig { method: Method::Mp, ..PipelineConfig::default() };
    run(inst, q, &cfg).unwrap().result.value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn raising_a_probability_never_lowers_the_answer(i in 0usize..3000, pick: prop::sample::Index, t in 0.0f64..=1.0) {
        let p = corpus_pair(91, i);
        let mut specs = p.instance.specs();
        prop_assume!(!specs.is_empty());
        let k = pick.index(specs.len());
        let before = mp(&p.instance, &p.query);
        specs[k].prob += (1.0 - specs[k].prob) * t;
        let raised = TidInstance::from_specs(specs).unwrap();
        prop_assert!(mp(&raised, &p.query) >= before - 1e-12);
    }

    #[test]
    fn shannon_expansion_holds(i in 0usize..3000, pick: prop::sample::Index) {
        let p = corpus_pair(92, i);
        let c = build_lineage(&p.instance, &p.query, &PipelineConfig::default(), Determinize::Try).unwrap().circuit;
        let vars: Vec<_> = c.var_probs.iter().map(|(&v, &q)| (v, q)).collect();
        prop_assume!(!vars.is_empty());
        let (v, q) = vars[pick.index(vars.len())];
        let hi = shannon_condition(&c, v, true);
        let lo = shannon_condition(&c, v, false);
        let whole = prob_message_passing(&c).unwrap().value;
        let split = q * prob_message_passing(&hi).unwrap().value + (1.0 - q) * prob_message_passing(&lo).unwrap().value;
        prop_assert!((whole - split).abs() < 1e-9);
        if c.ddnnf {
            let split = q * prob_ddnnf(&hi).unwrap().value + (1.0 - q) * prob_ddnnf(&lo).unwrap().value;
            prop_assert!((prob_ddnnf(&c).unwrap().value - split).abs() < 1e-9);
        }
    }
}

#[test]
fn exact_methods_match_the_world_oracle() {
    let mut checked = 0;
    for i in 0..400 {
        let p = corpus_pair(93, i);
        if p.instance.num_vars() > 12 {
            continue;
        }
        let want = common::exact_prob(&p.instance, &p.query);
        assert!((mp(&p.instance, &p.query) - want).abs() < 1e-9, "{}", p.name);
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn monte_carlo_error_bars_cover_the_truth() {
    let p = (0..)
        .map(|i| corpus_pair(94, i))
        .find(|p| {
            let v = mp(&p.instance, &p.query);
            p.instance.num_vars() >= 6 && v > 0.2 && v < 0.8
        })
        .unwrap();
    let truth = mp(&p.instance, &p.query);
    let c = build_lineage(&p.instance, &p.query, &PipelineConfig::default(), Determinize::No).unwrap().circuit;
    let inside = (0..100)
        .filter(|&seed| {
            let r = prob_monte_carlo(&c, 4000, seed).unwrap();
            (r.value - truth).abs() <= 2.0 * r.stderr.unwrap()
        })
        .count();
    assert!(inside >= 95, "{inside}/100 within two standard errors");
}
