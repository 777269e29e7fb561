use proptest::prelude::*;
use slcode::source_mux::{
    chip_collapse, chip_expand, matched_filter_events, run_event_demo, simulate_events, simulate_light_curtains,
    ChipCode, CurtainDevice, EventDemo,
};
use slcode::Grid;

fn chip_strategy(len: std::ops::Range<usize>) -> impl Strategy<Value = ChipCode> {
    prop::collection::vec(0u8..2, len)
        .prop_filter("chip needs a one", |b| b.contains(&1))
        .prop_map(|b| ChipCode::new(b, 0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expansion_round_trip(chip in chip_strategy(2..12), timeline in prop::collection::vec(0u8..2, 1..20)) {
        let expanded = chip_expand(&timeline, &chip).unwrap();
        prop_assert_eq!(expanded.len(), timeline.len() * chip.len());
        prop_assert_eq!(chip_collapse(&expanded, &chip).unwrap(), timeline);
    }

    #[test]
    fn own_periods_survive_any_threshold(chip in chip_strategy(2..12), periods in prop::collection::vec(0u8..2, 1..6), threshold in 0.0f32..=1.0) {
        let line: Vec<f32> = chip_expand(&periods, &chip).unwrap().iter().map(|&b| b as f32).collect();
        let stream = simulate_events(&Grid::from_vec(1, 1, vec![line]), 0.5).unwrap();
        let kept = matched_filter_events(&stream, &chip, threshold);
        let own: Vec<_> = stream.events.iter().filter(|e| periods[e.t / chip.len()] == 1).collect();
        for e in own {
            prop_assert!(kept.events.contains(e));
        }
    }

    #[test]
    fn curtains_separate_distinct_chips(
        a in chip_strategy(4..5),
        b in chip_strategy(4..5),
        coupling in 0.0f32..=1.0,
        objects in prop::collection::vec(any::<bool>(), 12 * 12),
    ) {
        prop_assume!(a.bits() != b.bits());
        let objects = Grid::from_vec(12, 12, objects);
        let devices = [
            CurtainDevice { chip: a, schedule: (0..12).collect() },
            CurtainDevice { chip: b, schedule: (0..12).rev().collect() },
        ];
        let res = simulate_light_curtains(&devices, &objects, coupling, None).unwrap();
        for d in 0..2 {
            let other = 1 - d;
            for (s, frame) in res.filtered[d].iter().enumerate() {
                for r in 0..12 {
                    let own = res.truth[d][s][r];
                    let foreign = *objects.get(r, devices[other].schedule[s]);
                    // a row lit by both curtains at once carries a summed signal
                    if own && foreign && coupling > 0.0 {
                        continue;
                    }
                    prop_assert_eq!(frame.detections[r], own);
                }
            }
        }
    }
}

#[test]
fn standard_event_demo_rejects_square_wave() {
    let chip = ChipCode::parse("10100010", 0).unwrap();
    let demo = EventDemo::standard(16, 16, chip.clone());
    let res = run_event_demo(&demo).unwrap();
    assert!(res.report.false_before > 0);
    assert_eq!((res.report.false_after, res.report.missed_after), (0, 0));
    assert_eq!(res.report.frame_overhead, 4.0);

    let control = EventDemo { interferer_sequence: chip.bits().to_vec(), ..demo };
    let res = run_event_demo(&control).unwrap();
    assert!(res.report.false_after > 0);
}

#[test]
fn identical_curtain_chips_warn_and_leak() {
    let (objects, schedules) = slcode::source_mux::standard_curtain_scene(16, 32).unwrap();
    let chip = ChipCode::parse("1100", 0).unwrap();
    let devices = [
        CurtainDevice { chip: chip.clone(), schedule: schedules[0].clone() },
        CurtainDevice { chip, schedule: schedules[1].clone() },
    ];
    let res = simulate_light_curtains(&devices, &objects, 1.0, None).unwrap();
    assert!(res.warning.is_some());
    assert!(res.report(0).false_after > 0);
}
