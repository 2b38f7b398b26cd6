use swarmcast_web::ClusterDemo;

#[test]
fn training_tightens_the_codebook() {
    let mut demo = ClusterDemo::new(32, 3).unwrap();
    let before = demo.distance().unwrap();
    let mut after = before;
    for _ in 0..5 {
        after = demo.train_epoch(1.0).unwrap();
    }
    assert_eq!(demo.epochs(), 5);
    assert!(after < 0.6 * before, "{before} -> {after}");
}

#[test]
fn geometry_arrays_line_up() {
    let mut demo = ClusterDemo::new(16, 1).unwrap();
    demo.train_epoch(1.0).unwrap();
    assert_eq!(demo.step(5), 5);
    let agents = demo.agents();
    assert_eq!(agents.len() % 2, 0);
    assert_eq!(demo.labels().len(), agents.len() / 2);
    assert_eq!(demo.weights().len(), 32);
    let clusters = demo.clusters();
    assert_eq!(clusters.len() % 3, 0);
    let distinct: std::collections::BTreeSet<u32> = demo.labels().into_iter().collect();
    assert_eq!(clusters.len() / 3, distinct.len());
    let s = demo.silhouette();
    assert!(s.is_nan() || (-1.0..=1.0).contains(&s));
}

#[test]
fn stepping_wraps_and_reset_keeps_the_scene() {
    let mut demo = ClusterDemo::new(8, 2).unwrap();
    let n = demo.frame_count();
    demo.step(n - 1);
    assert_eq!(demo.step(3), 2);
    let agents = demo.agents();
    demo.train_epoch(0.5).unwrap();
    demo.reset(4, 9).unwrap();
    assert_eq!((demo.k(), demo.epochs()), (4, 0));
    assert_eq!(demo.agents(), agents);
    assert!(ClusterDemo::new(0, 1).is_err());
}
