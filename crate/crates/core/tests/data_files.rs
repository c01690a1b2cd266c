use std::path::PathBuf;

use evogen::dataset::{load_iris, load_wdbc, parse_csv};
use evogen::evolve::{export_generated, Genome};
use evogen::harness::DatasetId;
use evogen::seed;

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn iris_loads_with_balanced_classes() {
    let d = load_iris::<f64>(data_file("iris.data")).unwrap();
    assert_eq!((d.n_instances(), d.n_attributes(), d.n_classes()), (150, 4, 3));
    assert_eq!(d.class_counts(), vec![50, 50, 50]);
    assert_eq!(d.features().row(0), &[5.1, 3.5, 1.4, 0.2]);
    assert_eq!(d.labels()[149], 2);
}

#[test]
fn wdbc_loads_with_diagnosis_labels() {
    let d = load_wdbc::<f64>(data_file("wdbc.data")).unwrap();
    assert_eq!((d.n_instances(), d.n_attributes(), d.n_classes()), (569, 30, 2));
    assert_eq!(d.class_counts(), vec![212, 357]);
    assert_eq!(d.attribute_names().len(), 30);
}

#[test]
fn reference_split_sizes() {
    let iris = load_iris::<f64>(data_file("iris.data")).unwrap();
    let split = iris.split_random(0.7, 1).unwrap();
    assert_eq!((split.train_test.n_instances(), split.validate.n_instances()), (105, 45));
    let wdbc = load_wdbc::<f64>(data_file("wdbc.data")).unwrap();
    let split = wdbc.split_random(0.8, 1).unwrap();
    assert_eq!((split.train_test.n_instances(), split.validate.n_instances()), (455, 114));
    let scarce = wdbc.split_scarce(1, 3).unwrap();
    assert_eq!((scarce.train_test.n_instances(), scarce.validate.n_instances()), (2, 567));
}

#[test]
fn iris_normalization_bounds() {
    let d = load_iris::<f64>(data_file("iris.data")).unwrap().min_max_normalize().unwrap();
    let params = d.norm_params().unwrap();
    assert_eq!(params[0], (4.3, 7.9));
    assert_eq!(params[3], (0.1, 2.5));
    let back = d.denormalize().unwrap();
    let orig = load_iris::<f64>(data_file("iris.data")).unwrap();
    for (a, b) in back.features().as_slice().iter().zip(orig.features().as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn exported_generated_data_round_trips_through_csv() {
    let iris = load_iris::<f64>(data_file("iris.data")).unwrap().min_max_normalize().unwrap();
    let mut rng = seed::rng(8);
    let genome = Genome::<f64>::random(150, 4, 3, &mut rng).unwrap();
    let exported = export_generated(&genome, iris.norm_params().unwrap()).unwrap();
    assert_eq!(exported.class_counts(), vec![50, 50, 50]);
    let csv = exported.to_csv();
    assert!(csv.starts_with("attr_0,attr_1,attr_2,attr_3,label\n"));
    let back = parse_csv::<f64>(&csv, Some(3)).unwrap();
    assert_eq!(back, exported);
    let genes = back.normalize_with(iris.norm_params().unwrap()).unwrap();
    for (a, b) in genes.features().as_slice().iter().zip(genome.genes().as_slice()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn dataset_ids_know_their_files() {
    for id in [DatasetId::Iris, DatasetId::Wdbc] {
        let d = id.load::<f64>(data_file(id.file_name())).unwrap();
        assert_eq!(d.n_attributes(), id.n_attributes());
        assert_eq!(d.n_classes(), id.n_classes());
    }
}
