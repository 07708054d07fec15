use fck_core::partitions::{compare_leq, enumerate_partitions, join_partitions, Family, Partition};

fn brute(n: usize, keep: impl Fn(&Partition) -> bool) -> Vec<Partition> {
    enumerate_partitions(n, Family::All).unwrap().into_iter().filter(|p| keep(p)).collect()
}

#[test]
fn filtered_families_match_brute_force() {
    for n in 1..=10 {
        let nc = enumerate_partitions(n, Family::NonCrossing).unwrap();
        assert_eq!(nc, brute(n, Partition::is_noncrossing), "n = {n}");
    }
    for n in 1..=12 {
        let int = enumerate_partitions(n, Family::Interval).unwrap();
        assert_eq!(int.len(), 1 << (n - 1));
        assert!(int.iter().all(|p| p.is_interval() && p.is_noncrossing()));
        if n <= 10 {
            assert_eq!(int, brute(n, Partition::is_interval));
        }
    }
}

#[test]
fn size_limit_names_the_cap() {
    let e = enumerate_partitions(15, Family::All).unwrap_err();
    assert!(e.to_string().contains("14"), "{e}");
    assert!(enumerate_partitions(0, Family::All).is_err());
}

#[test]
fn refinement_is_a_partial_order() {
    for n in 1..=6 {
        for fam in [Family::All, Family::NonCrossing, Family::Interval] {
            let ps = enumerate_partitions(n, fam).unwrap();
            let leq: Vec<Vec<bool>> = ps.iter().map(|p| ps.iter().map(|q| compare_leq(p, q).unwrap()).collect()).collect();
            for i in 0..ps.len() {
                assert!(leq[i][i]);
                for j in 0..ps.len() {
                    if i != j && leq[i][j] {
                        assert!(!leq[j][i], "antisymmetry {} {}", ps[i], ps[j]);
                    }
                    if !leq[i][j] {
                        continue;
                    }
                    for k in 0..ps.len() {
                        if leq[j][k] {
                            assert!(leq[i][k]);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn join_is_the_least_upper_bound() {
    for n in 1..=6 {
        let ps = enumerate_partitions(n, Family::All).unwrap();
        for p in &ps {
            for q in &ps {
                let j = join_partitions(p, q).unwrap();
                assert!(compare_leq(p, &j).unwrap() && compare_leq(q, &j).unwrap());
                for r in &ps {
                    if compare_leq(p, r).unwrap() && compare_leq(q, r).unwrap() {
                        assert!(compare_leq(&j, r).unwrap(), "{p} ∨ {q} = {j} not below {r}");
                    }
                }
            }
        }
    }
}

#[test]
fn join_of_interval_partitions_is_interval() {
    for n in 1..=8 {
        let ps = enumerate_partitions(n, Family::Interval).unwrap();
        for p in &ps {
            for q in &ps {
                assert!(join_partitions(p, q).unwrap().is_interval());
            }
        }
    }
}

#[test]
fn mismatched_sizes_are_rejected() {
    let a = Partition::one(3);
    let b = Partition::one(4);
    assert!(compare_leq(&a, &b).is_err());
    assert!(join_partitions(&a, &b).is_err());
}

#[test]
fn brace_notation_round_trips() {
    for p in enumerate_partitions(5, Family::All).unwrap() {
        assert_eq!(Partition::parse(&p.to_brace_string()).unwrap(), p);
    }
}
