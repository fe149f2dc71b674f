use super::*;
use crate::refine::Convergence;
use crate::text::parse_system;

fn sys(text: &str) -> PolySystem {
    parse_system(text).unwrap().system
}

fn over(vars: &Variables, text: &str) -> Polynomial {
    let header = format!("vars: {}\n{text}", vars.join(", "));
    parse_system(&header).unwrap().system.polys()[0].clone()
}

fn ex6() -> PolySystem {
    sys("-9/4 + 3/2*x1 + 2*x2 + 3*x3 + 4*x4 - 1/4*x1^2
         x1 - 2*x2 - 2*x3 - 4*x4 + 2*x1*x2 + 3*x1*x3 + 4*x1*x4
         8 - 4*x1 - 8*x4 + 2*x4^2 + 4*x1*x4 - x1*x4^2
         -3 + 3*x1 + 2*x2 + 4*x3 + 4*x4")
}

const EX6_P: [f64; 4] = [1.00004659, -1.99995813, -0.99991547, 2.00005261];

fn dz2() -> PolySystem {
    sys("x1^4\nx1^2*x2 + x2^4\nx3 + x3^2 - 7*x1^3 - 8*x1^2")
}

const DZ2_P: [f64; 3] = [0.00006787, 0.00007577, -0.9999];

fn fixed(theta: f64, eps: f64) -> CdssOptions {
    CdssOptions {
        theta: ThetaPolicy::Fixed(theta),
        eps,
        ..CdssOptions::default()
    }
}

#[test]
fn ex6_harvest_and_rank() {
    let state = DeflationState::harvested(&ex6(), &EX6_P, &ThetaPolicy::Fixed(0.05)).unwrap();
    let df3 = over(ex6().vars(), "-8 + 4*x1 + 4*x4 - 2*x1*x4");
    let polys: Vec<_> = state.members().iter().map(|m| m.poly.clone()).collect();
    let f = ex6();
    assert_eq!(polys, vec![f.polys()[0].clone(), f.polys()[1].clone(), df3, f.polys()[3].clone(), f.polys()[2].clone()]);
    assert_eq!(state.rank(0.005, RankMode::Absolute).unwrap(), 3);
    assert_eq!(select_full_rank_subset(&polys, &EX6_P, 0.005, RankMode::Absolute, 3).unwrap(), vec![0, 1, 2]);
}

#[test]
fn ex6_combination() {
    let state = DeflationState::harvested(&ex6(), &EX6_P, &ThetaPolicy::Fixed(0.05)).unwrap();
    let aug = combine_and_differentiate(&[0, 1, 2], 3, &state).unwrap();
    let expected = [-1.000006509, -0.9997557989, 0.000106178711];
    for (a, e) in aug.alpha_init.iter().zip(expected) {
        assert!((a - e).abs() < 1e-6, "{:?}", aug.alpha_init);
    }
    assert_eq!(aug.new_polys.len(), 4);
    let g4 = over(&aug.vars, "4 + 4*alpha1 - 4*alpha2 + 4*alpha3 + 4*alpha2*x1 - 2*alpha3*x1");
    assert_eq!(aug.new_polys[3], g4);
    let g2 = over(&aug.vars, "2 + 2*alpha1 - 2*alpha2 + 2*alpha2*x1");
    assert_eq!(aug.new_polys[1], g2);
}

#[test]
fn ex6_cdss() {
    let d = cdss(&ex6(), &EX6_P, &fixed(0.05, 0.005)).unwrap();
    assert_eq!(d.size(), 7);
    assert_eq!(d.n_alpha(), 3);
    assert_eq!(d.rounds, 1);
    assert_eq!(d.selected, vec![0, 1, 2, 5, 6, 7, 8]);
    let j = d.system.jacobian(d.point.coords()).unwrap();
    assert_eq!(linalg::numerical_rank(&j, 0.005, RankMode::Absolute).unwrap(), 7);
    assert!(d.max_x_degree() <= ex6().total_degree());
    assert_eq!(d.poly_count(), 9);
}

#[test]
fn dz2_cdss_needs_no_new_variables() {
    let d = cdss(&dz2(), &DZ2_P, &fixed(0.005, 0.005)).unwrap();
    assert_eq!(d.size(), 3);
    assert_eq!(d.n_alpha(), 0);
    let vars = dz2().vars().clone();
    let want = [over(&vars, "x1"), over(&vars, "x2"), dz2().polys()[2].clone()];
    for w in &want {
        assert!(d.system.polys().iter().any(|f| f.is_scalar_multiple_of(w, 1e-12)), "{:?}", d.system);
    }
}

#[test]
fn regular_input_is_returned_unchanged() {
    let s = sys("x + y - 2\nx - y");
    let d = cdss(&s, &[1.00003, 0.99996], &CdssOptions::default()).unwrap();
    assert_eq!(d.system, s);
    assert_eq!(d.rounds, 0);
    assert_eq!(d.n_alpha(), 0);
}

#[test]
fn second_round_derivative() {
    // round 1: g = f2 + alpha1 f1; round 2 combines gy with f1 and gx
    let s = sys("x - y + x^2\nx - y + y^2");
    let mut state = DeflationState::new(&s, &[0.0006721, 0.0008381]).unwrap();
    let aug = combine_and_differentiate(&[0], 1, &state).unwrap();
    assert!((aug.alpha_init[0] + 0.9984909264232).abs() < 1e-8);
    state.apply(&[0], 1, aug);
    // members: f1, f2, gx, gy
    let aug2 = combine_and_differentiate(&[0, 2], 3, &state).unwrap();
    let d_alpha1 = &aug2.new_polys[2];
    assert_eq!(*d_alpha1, over(&aug2.vars, "2*alpha3*x + alpha3 - 1"));
}

#[test]
fn two_variable_hand_case() {
    let s = sys("x\n2*y");
    let state = DeflationState::new(&s, &[0.0, 0.0]).unwrap();
    let aug = combine_and_differentiate(&[0], 1, &state).unwrap();
    assert_eq!(aug.alpha_init, vec![0.0]);
    assert_eq!(aug.combination, over(&aug.vars, "2*y + alpha1*x"));
    assert_eq!(aug.new_polys, vec![over(&aug.vars, "alpha1"), over(&aug.vars, "2")]);
}

#[test]
fn empty_selection_for_rank_zero() {
    let s = sys("x\ny");
    assert!(select_full_rank_subset(s.polys(), &[0.0, 0.0], 0.1, RankMode::Absolute, 0).unwrap().is_empty());
}

#[test]
fn provenance_reaches_inputs() {
    let d = cdss(&ex6(), &EX6_P, &fixed(0.05, 0.005)).unwrap();
    for m in &d.members {
        match &m.provenance {
            Provenance::Input { index } => assert!(*index < 4),
            Provenance::Derivative { input, .. } => assert!(*input < 4),
            Provenance::CombinationDerivative { combination, .. } => {
                let c = &d.combinations[*combination];
                assert!(c.target < d.active_size);
                assert!(c.partners.iter().all(|(m, _)| *m < d.active_size));
            }
            Provenance::Partial { member, .. } => assert!(*member < d.active_size),
        }
    }
    assert!(d.trace_log().contains("accepted"));
}

#[test]
fn alpha_linearity() {
    let d = cdss(&ex6(), &EX6_P, &fixed(0.05, 0.005)).unwrap();
    for f in d.system.polys() {
        for a in d.n_original..d.system.nvars() {
            assert!(f.degree_in_var(a) <= 1);
        }
    }
}

#[test]
fn rank_guess_finds_combination_branch() {
    let s = sys("x + x^2 + 2*x*y + 10000*y^2\n1/20*x + x^2 + 2*x*y + 10000*y^2");
    let opts = RankGuessOptions {
        eps: 0.05,
        execution: crate::exec::Execution::Sequential,
        ..RankGuessOptions::default()
    };
    let out = rank_guess_pipeline(&s, &[0.000006851, -0.000004368], &opts).unwrap();
    assert_eq!(out.branches[0].guesses, vec![2]);
    assert_eq!(out.branches[0].convergence, Some(Convergence::Linear));
    let last = out.branches.last().unwrap();
    assert!(last.accepted);
    assert_eq!(last.guesses, vec![1, 3]);
    assert_eq!(out.deflated.size(), 3);
    assert!((out.point.coords()[2] + 0.05).abs() < 1e-12);
    assert!(out.diagnosis.delta < 1e-12);
}

#[test]
fn rank_guess_accepts_regular_system_immediately() {
    let s = sys("x + y - 2\nx - y");
    let out = rank_guess_pipeline(&s, &[1.00003, 0.99996], &RankGuessOptions::default()).unwrap();
    assert_eq!(out.branches.len(), 1);
    assert_eq!(out.deflated.system, s);
}
