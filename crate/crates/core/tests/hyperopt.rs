use docroute::classifiers::ClassifierKind;
use docroute::hyperopt::space::{space_for, spec_from_assignment, Assignment, Domain, Param, Scale, SearchSpace, Value};
use docroute::hyperopt::{bayes_search, random_search, SearchOptions};
use docroute::runner::Base;
use docroute::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit(name: &str) -> Param {
    Param {
        name: name.into(),
        domain: Domain::Continuous {
            lo: 0.0,
            hi: 1.0,
            scale: Scale::Linear,
        },
    }
}

fn float(a: &Assignment, name: &str) -> f64 {
    match &a[name] {
        Value::Float(v) => *v,
        other => panic!("{name} is {other:?}"),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) / 2.0
}

#[test]
fn quadratic_optimum_is_found_in_most_seeds() {
    let space = SearchSpace { params: vec![unit("x")] };
    let f = |a: &Assignment| Ok(-(float(a, "x") - 0.5).powi(2));
    let hits = (0..10)
        .filter(|&seed| {
            let r = bayes_search(f, &space, &SearchOptions::new(40, seed)).unwrap();
            assert_eq!(r.history.len(), 40);
            (float(&r.best.assignment, "x") - 0.5).abs() <= 0.05
        })
        .count();
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn categorical_argmax_is_exact() {
    let options = ["alpha", "beta", "gamma", "delta"];
    let space = SearchSpace {
        params: vec![Param {
            name: "pick".into(),
            domain: Domain::Categorical {
                options: options.iter().map(|s| s.to_string()).collect(),
            },
        }],
    };
    let score = |a: &Assignment| match &a["pick"] {
        Value::Category(c) => Ok([0.1, 0.7, 0.3, 0.5][options.iter().position(|o| o == c).unwrap()]),
        other => panic!("{other:?}"),
    };
    for seed in 0..5 {
        let r = bayes_search(score, &space, &SearchOptions::new(16, seed)).unwrap();
        assert_eq!(r.best.assignment["pick"], Value::Category("beta".into()));
        assert_eq!(r.best.value, 0.7);
    }
}

/// Smooth two-peak surface on the unit square.
fn bumps(a: &Assignment) -> docroute::Result<f64> {
    let (x, y) = (float(a, "x"), float(a, "y"));
    let g = |cx: f64, cy: f64, w: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / w).exp();
    Ok(g(0.2, 0.7, 0.02) + 0.6 * g(0.8, 0.2, 0.05))
}

#[test]
fn median_beats_random_search() {
    let space = SearchSpace {
        params: vec![unit("x"), unit("y")],
    };
    let bayes: Vec<f64> = (0..10)
        .map(|s| bayes_search(bumps, &space, &SearchOptions::new(30, s)).unwrap().best.value)
        .collect();
    let random: Vec<f64> = (0..10)
        .map(|s| random_search(bumps, &space, 30, s).unwrap().best.value)
        .collect();
    assert!(median(bayes.clone()) >= median(random.clone()), "{bayes:?} vs {random:?}");
}

#[test]
fn trials_stay_inside_the_space() {
    for kind in ClassifierKind::ALL {
        let space = space_for(kind, Base::Segment);
        let mut opts = SearchOptions::new(12, 3);
        opts.batch_size = 3;
        let r = bayes_search(|_| Ok(0.5), &space, &opts).unwrap();
        for t in &r.history {
            assert!(space.contains(&t.assignment), "{kind} {:?}", t.assignment);
            spec_from_assignment(kind, &t.assignment).unwrap().validate().unwrap();
        }
    }
}

#[test]
fn sampled_assignments_round_trip_through_encoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for kind in ClassifierKind::ALL {
        let space = space_for(kind, Base::Document);
        for _ in 0..50 {
            let a = space.sample(&mut rng);
            let u = space.encode(&a);
            assert_eq!(u.len(), space.encoded_dim());
            assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
            let back = space.decode(&u);
            for (name, v) in &a {
                match (v, &back[name]) {
                    (Value::Float(x), Value::Float(y)) => assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)),
                    (x, y) => assert_eq!(x, y),
                }
            }
        }
    }
}

#[test]
fn failures_score_zero_and_runs_repeat() {
    let space = SearchSpace { params: vec![unit("x")] };
    let f = |a: &Assignment| {
        let x = float(a, "x");
        if x < 0.3 {
            Err(Error::InvalidParameter("too small".into()))
        } else {
            Ok(x)
        }
    };
    let dir = tempfile::tempdir().unwrap();
    let mut opts = SearchOptions::new(15, 8);
    opts.log_path = Some(dir.path().join("trials.jsonl"));
    let r = bayes_search(f, &space, &opts).unwrap();
    for t in &r.history {
        assert_eq!(t.error.is_some(), t.value == 0.0 && float(&t.assignment, "x") < 0.3);
    }
    let log = std::fs::read_to_string(dir.path().join("trials.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 15);
    opts.log_path = None;
    let again = bayes_search(f, &space, &opts).unwrap();
    let strip = |r: &docroute::hyperopt::SearchResult| -> Vec<(Assignment, f64)> {
        r.history.iter().map(|t| (t.assignment.clone(), t.value)).collect()
    };
    assert_eq!(strip(&r), strip(&again));
}

#[test]
fn bad_options_are_rejected() {
    let space = SearchSpace { params: vec![unit("x")] };
    assert!(bayes_search(|_| Ok(0.0), &space, &SearchOptions::new(0, 1)).is_err());
    let mut opts = SearchOptions::new(5, 1);
    opts.batch_size = 0;
    assert!(bayes_search(|_| Ok(0.0), &space, &opts).is_err());
    let empty = SearchSpace {
        params: vec![Param {
            name: "x".into(),
            domain: Domain::Continuous {
                lo: 1.0,
                hi: 0.0,
                scale: Scale::Linear,
            },
        }],
    };
    assert!(bayes_search(|_| Ok(0.0), &empty, &SearchOptions::new(5, 1)).is_err());
}
