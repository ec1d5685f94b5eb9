use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gml_core::solver::{decide_transitive, OracleTable, MAX_ORACLE_SIZE};
use gml_core::{parse, Execution, SolverOptions};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn oracle_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_table");
    for text in ["dia>=2 p & box (p -> dia<=1 q)", "p & box (p -> dia ~p) & dia<=1 r"] {
        let f = parse(text).unwrap();
        for (name, exec) in STRATEGIES {
            group.bench_with_input(BenchmarkId::new(name, text), &f, |b, f| {
                b.iter(|| OracleTable::build(black_box(f), MAX_ORACLE_SIZE, exec))
            });
        }
    }
    group.finish();
}

fn transitive_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("transitive_search");
    group.sample_size(10);
    let f = parse("q0 & dia>=2 (~q0 & q1 & dia>=1 (~q0 & ~q1)) & dia<=1 ~q1").unwrap();
    let classes = "tr".parse().unwrap();
    for (name, exec) in STRATEGIES {
        let opts = SolverOptions {
            cap: Some(8),
            execution: exec,
        };
        group.bench_function(name, |b| b.iter(|| decide_transitive(black_box(&f), classes, opts)));
    }
    group.finish();
}

criterion_group!(benches, oracle_table, transitive_search);
criterion_main!(benches);
