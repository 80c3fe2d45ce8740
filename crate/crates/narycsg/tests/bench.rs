use narycsg::bench::{bench_scaling, bench_scene, BenchError, SceneSpec};
use narycsg::parallel::TaskBudget;
use narycsg_core::pipeline::PipelineConfig;

fn run(spec: &SceneSpec) -> Result<narycsg::bench::BenchRow, BenchError> {
    let cfg = PipelineConfig::default();
    bench_scene(spec, &cfg, &TaskBudget::new(1, &cfg.exploration))
}

#[test]
fn input_size_grows_with_resolution() {
    let cfg = PipelineConfig::default();
    let specs: Vec<_> = [8, 12, 16].iter().map(|&r| SceneSpec { count: 10, ..SceneSpec::t1(r, 11) }).collect();
    let rows = bench_scaling(&specs, &cfg, &TaskBudget::new(1, &cfg.exploration)).unwrap();
    for (row, spec) in rows.iter().zip(&specs) {
        assert_eq!(row.m, spec.facet_count() as u64);
        assert_eq!(row.errors, 0);
    }
    assert!(rows.windows(2).all(|w| w[0].m < w[1].m));
}

#[test]
fn concentric_tori_intersect() {
    let row = run(&SceneSpec { count: 8, ..SceneSpec::t2(16, 3) }).unwrap();
    assert!(row.h > 0);
    assert!(row.output_vertices > 0);
    assert_eq!(row.errors, 0);
    assert!(row.scaling().unwrap() > 0.0);
}

#[test]
fn empty_scene() {
    assert!(matches!(run(&SceneSpec { count: 0, ..SceneSpec::t1(8, 0) }), Err(BenchError::EmptyScene)));
}
