mod support;

use support::{fd_check, toy_alignment};

#[test]
fn backward_matches_central_differences() {
    for seed in 0..20 {
        let r = fd_check(seed);
        assert!(r.max_rel_err <= 1e-3, "instance {seed}: {r:?}");
    }
}

#[test]
fn approximate_gradient_climbs_the_exact_objective() {
    let positive = (0..200).filter(|&s| toy_alignment(1000 + s, 1) > 0.0).count();
    println!("single-flow toy: {positive}/200 positive");
    assert!(positive >= 190, "{positive}/200 positive");
}

#[test]
fn shared_link_coupling_still_mostly_aligned() {
    let positive = (0..200).filter(|&s| toy_alignment(1000 + s, 4) > 0.0).count();
    println!("coupled toy: {positive}/200 positive");
    assert!(positive >= 160, "{positive}/200 positive");
}
