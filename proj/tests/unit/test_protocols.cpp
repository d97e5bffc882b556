#include <cmath>

#include <gtest/gtest.h>

#include "duality/protocols.hpp"
#include "oracles.hpp"

using namespace duality;

namespace {

ProtocolConfig config(Protocol p, std::uint64_t n, std::uint64_t seed = 17) {
    ProtocolConfig c;
    c.protocol = p;
    c.n_pairs = n;
    c.seed = seed;
    return c;
}

Verdict verdict(const RunResult& r, std::string_view subset) {
    const auto* s = r.subset(subset);
    EXPECT_NE(s, nullptr) << subset;
    return s ? s->classification.verdict : Verdict::Indeterminate;
}

std::uint64_t counted(const RunResult& r) {
    std::uint64_t n = 0;
    for (const auto& s : r.subsets) n += s.count;
    return n;
}

} // namespace

TEST(DoubleSlit, RecordingGivesParticle) {
    auto c = config(Protocol::DoubleSlit, 100000);
    c.detectors_recording = true;
    for (auto policy : {RenderingPolicy::CollapseAtDetection, RenderingPolicy::RenderAtAvailability}) {
        c.model.policy = policy;
        const auto r = run_double_slit(c);
        EXPECT_EQ(verdict(r, "screen"), Verdict::Particle);
        EXPECT_EQ(counted(r), c.n_pairs);
    }
}

TEST(DoubleSlit, NoDetectorsGivesWave) {
    auto c = config(Protocol::DoubleSlit, 100000);
    c.detectors_recording = false;
    for (auto policy : {RenderingPolicy::CollapseAtDetection, RenderingPolicy::RenderAtAvailability}) {
        c.model.policy = policy;
        const auto r = run_double_slit(c);
        EXPECT_EQ(verdict(r, "screen"), Verdict::Wave);
        EXPECT_GT(*r.subset("screen")->visibility, 0.9);
    }
}

TEST(DoubleSlit, SingleImpactIsIndeterminate) {
    auto c = config(Protocol::DoubleSlit, 1);
    c.detectors_recording = false;
    EXPECT_EQ(verdict(run_double_slit(c), "screen"), Verdict::Indeterminate);
}

TEST(DoubleSlit, WrongProtocolRejected) {
    EXPECT_THROW((void)run_double_slit(config(Protocol::QuantumEraser, 10)), ValidationError);
}

TEST(DelayedChoice, SubsetsAndPooledMixture) {
    const auto r = run_delayed_choice(config(Protocol::DelayedChoice, 200000));
    EXPECT_EQ(verdict(r, "recorded"), Verdict::Particle);
    EXPECT_EQ(verdict(r, "unrecorded"), Verdict::Wave);
    EXPECT_LT(*r.subset("recorded")->visibility, 0.1);
    EXPECT_GT(*r.subset("unrecorded")->visibility, 0.9);
    EXPECT_NEAR(*r.pooled.visibility, 0.5, 0.03);
    EXPECT_EQ(counted(r), 200000u);
}

TEST(DelayedChoice, AlwaysRecordReproducesDoubleSlit) {
    auto c = config(Protocol::DelayedChoice, 20000);
    c.record_probability = 1.0;
    const auto r = run_delayed_choice(c);
    EXPECT_EQ(r.subset("recorded")->count, 20000u);
    EXPECT_EQ(verdict(r, "recorded"), Verdict::Particle);
}

TEST(QuantumEraser, ChannelVerdicts) {
    for (auto policy : {RenderingPolicy::CollapseAtDetection, RenderingPolicy::RenderAtAvailability}) {
        auto c = config(Protocol::QuantumEraser, 400000);
        c.model.policy = policy;
        const auto r = run_quantum_eraser(c);
        EXPECT_EQ(verdict(r, "D1"), Verdict::Wave);
        EXPECT_EQ(verdict(r, "D2"), Verdict::Wave);
        EXPECT_EQ(verdict(r, "D3"), Verdict::Particle);
        EXPECT_EQ(verdict(r, "D4"), Verdict::Particle);
        EXPECT_GT(*r.subset("D1")->visibility, 0.9);
        EXPECT_LT(*r.subset("D3")->visibility, 0.1);
        EXPECT_DOUBLE_EQ(*r.statistic("slit_purity.D3"), 1.0);
        EXPECT_DOUBLE_EQ(*r.statistic("slit_purity.D4"), 1.0);
        EXPECT_EQ(r.unmatched, 0u);
    }
}

TEST(QuantumEraser, D2IsAntiFringe) {
    const auto r = run_quantum_eraser(config(Protocol::QuantumEraser, 100000));
    EXPECT_NEAR(std::abs(r.subset("D2")->classification.phase_rad), oracle::pi / 2, 0.05);
    EXPECT_NEAR(r.subset("D1")->classification.phase_rad, 0.0, 0.05);
}

TEST(DetectNoRecord, ModelsDisagree) {
    auto c = config(Protocol::DetectNoRecord, 100000);
    c.model.policy = RenderingPolicy::RenderAtAvailability;
    EXPECT_EQ(verdict(run_detect_no_record(c), "screen"), Verdict::Wave);
    c.model.policy = RenderingPolicy::CollapseAtDetection;
    EXPECT_EQ(verdict(run_detect_no_record(c), "screen"), Verdict::Particle);
}

TEST(DetectNoRecord, ChannelsOffSortedSubsetsAreWave) {
    auto c = config(Protocol::DetectNoRecord, 100000);
    c.detect_no_record_variant = DetectNoRecordVariant::D3D4ChannelsOff;
    const auto r = run_detect_no_record(c);
    EXPECT_EQ(verdict(r, "D1"), Verdict::Wave);
    EXPECT_EQ(verdict(r, "D2"), Verdict::Wave);
    EXPECT_EQ(verdict(r, "unsorted"), Verdict::Wave);
}

TEST(DetectNoRecord, NoCoincidenceCounterVariant) {
    auto c = config(Protocol::DetectNoRecord, 50000);
    c.detect_no_record_variant = DetectNoRecordVariant::NoCoincidenceCounter;
    const auto r = run_detect_no_record(c);
    EXPECT_FALSE(r.coincidence.used);
    EXPECT_EQ(verdict(r, "screen"), Verdict::Wave);
}

TEST(MacroscopicErasure, RenderAtAvailability) {
    auto c = config(Protocol::MacroscopicErasure, 10000);
    c.delta_t_s = presets::long_delay_s;
    c.coincidence_window_s = 1.0;
    const auto r = run_macroscopic_erasure(c);
    EXPECT_EQ(verdict(r, "destroyed"), Verdict::Wave);
    EXPECT_EQ(verdict(r, "surviving"), Verdict::Particle);
}

TEST(MacroscopicErasure, CollapseGivesParticleEverywhere) {
    auto c = config(Protocol::MacroscopicErasure, 10000);
    c.model.policy = RenderingPolicy::CollapseAtDetection;
    const auto r = run_macroscopic_erasure(c);
    EXPECT_EQ(verdict(r, "destroyed"), Verdict::Particle);
    EXPECT_EQ(verdict(r, "surviving"), Verdict::Particle);
}

TEST(MacroscopicErasure, ExactHalfSubset) {
    auto c = config(Protocol::MacroscopicErasure, 10000);
    c.pairing_mode = PairingMode::ExactHalfSubset;
    const auto r = run_macroscopic_erasure(c);
    EXPECT_EQ(r.subset("destroyed")->count, 5000u);
    c.n_pairs = 10001;
    EXPECT_THROW((void)run_macroscopic_erasure(c), ValidationError);
}

TEST(MacroscopicErasure, AtT0ScheduleRejected) {
    auto c = config(Protocol::MacroscopicErasure, 10);
    c.observation_schedule = ObservationSchedule::AtT0;
    EXPECT_THROW((void)run_macroscopic_erasure(c), ValidationError);
}

TEST(Predictor, PosteriorCurveAndAccuracy) {
    const auto r = run_predictor(config(Protocol::PredictorExperiment, 1000000, 23));
    ASSERT_TRUE(r.predictor);
    const auto& p = *r.predictor;
    EXPECT_LE(p.max_abs_deviation, 0.02);
    EXPECT_GT(p.dark_fringe_bins, 0u);
    EXPECT_GE(p.min_dark_fringe_posterior, 0.99);
    const OpticsConfig cfg;
    const double a = cfg.fringe_scale();
    const double w = cfg.window_width();
    const double ref = 0.5 * oracle::integrate([&](double x) { return std::max(2.0 * oracle::cos2(x, a) / w, 1.0 / w); },
                                               cfg.window_lo(), cfg.window_hi(), a / 4);
    EXPECT_NEAR(p.accuracy, ref, 0.005);
    EXPECT_EQ(verdict(r, "R1"), Verdict::Particle);
    EXPECT_EQ(verdict(r, "R0"), Verdict::Wave);
}

namespace {

ProtocolConfig stage_d(OutcomeHypothesis h, SwitchStrategy s, std::uint64_t n = 100000) {
    auto c = config(Protocol::SwitchParadox, n);
    c.switch_stage = SwitchStage::D;
    c.observation_schedule = ObservationSchedule::AtT0;
    c.outcome_hypothesis = h;
    c.strategy = std::move(s);
    return c;
}

} // namespace

TEST(SwitchExperiment, EarlyStagesAreWaveForBothDelays) {
    for (auto stage : {SwitchStage::A, SwitchStage::B, SwitchStage::C}) {
        std::vector<Histogram> hists;
        for (double dt : {presets::short_delay_s, presets::long_delay_s}) {
            auto c = config(Protocol::SwitchParadox, 100000);
            c.switch_stage = stage;
            c.delta_t_s = dt;
            c.coincidence_window_s = dt / 10;
            const auto r = run_switch_experiment(c);
            ASSERT_EQ(r.subsets.size(), 1u);
            EXPECT_EQ(r.subsets[0].classification.verdict, Verdict::Wave);
            hists.push_back(r.subsets[0].histogram);
        }
        EXPECT_EQ(hists[0], hists[1]);
    }
}

TEST(SwitchExperiment, OutcomeIWithOptimalSetIsRefused) {
    const OpticsConfig optics;
    const auto r = run_switch_experiment(stage_d(OutcomeHypothesis::I, SwitchStrategy::strategy1(optimal_interval_set(optics))));
    EXPECT_EQ(r.status, RunStatus::Refused);
    ASSERT_TRUE(r.feasibility);
    EXPECT_NEAR(r.feasibility->margin, 1.0 / oracle::pi, 1e-9);
    EXPECT_FALSE(r.feasibility->feasible_under_outcome_i);
    EXPECT_TRUE(r.subsets.empty());
}

TEST(SwitchExperiment, OutcomeIDegenerateStrategiesComplete) {
    const OpticsConfig optics;
    const auto never = run_switch_experiment(stage_d(OutcomeHypothesis::I, SwitchStrategy::strategy1({})));
    EXPECT_EQ(never.status, RunStatus::Completed);
    EXPECT_EQ(verdict(never, "switch_off"), Verdict::Wave);
    EXPECT_EQ(never.subset("switch_on")->count, 0u);
    const auto always = run_switch_experiment(stage_d(OutcomeHypothesis::I, SwitchStrategy::strategy1(IntervalSet::full(optics))));
    EXPECT_EQ(always.status, RunStatus::Completed);
    EXPECT_EQ(verdict(always, "switch_on"), Verdict::Particle);
}

TEST(SwitchExperiment, OutcomeIBelowThresholdRunsRenormalized) {
    const OpticsConfig optics;
    // A thin band: delta close to 1, above the 0.9 noise threshold.
    auto c = stage_d(OutcomeHypothesis::I, SwitchStrategy::strategy1(IntervalSet({{-0.2e-3, 0.2e-3}})), 50000);
    const auto r = run_switch_experiment(c);
    EXPECT_EQ(r.status, RunStatus::Completed);
    EXPECT_TRUE(r.has_marker(markers::statistically_indistinguishable));
    EXPECT_EQ(counted(r), 50000u);
}

TEST(SwitchExperiment, OutcomeIIAlwaysOffStillParticle) {
    const auto r = run_switch_experiment(stage_d(OutcomeHypothesis::II, SwitchStrategy::always_off()));
    EXPECT_EQ(verdict(r, "switch_off"), Verdict::Particle);
    EXPECT_EQ(r.subset("switch_on")->count, 0u);
}

TEST(SwitchExperiment, OutcomeIIIAndIV) {
    const OpticsConfig optics;
    const auto iii = run_switch_experiment(stage_d(OutcomeHypothesis::III, SwitchStrategy::always_on(), 20000));
    EXPECT_TRUE(iii.has_marker(markers::recordable_with_interference));
    EXPECT_EQ(verdict(iii, "switch_on"), Verdict::Wave);
    const auto iv = run_switch_experiment(stage_d(OutcomeHypothesis::IV, SwitchStrategy::always_on(), 20000));
    EXPECT_EQ(iv.status, RunStatus::Discontinuity);
    EXPECT_TRUE(iv.has_marker(markers::discontinuity));
}

TEST(SwitchExperiment, DefaultHypothesisFollowsModel) {
    auto c = stage_d(OutcomeHypothesis::I, SwitchStrategy::always_off(), 10);
    c.outcome_hypothesis.reset();
    c.model.policy = RenderingPolicy::CollapseAtDetection;
    EXPECT_EQ(effective_hypothesis(c), OutcomeHypothesis::I);
    c.model.policy = RenderingPolicy::RenderAtAvailability;
    EXPECT_EQ(effective_hypothesis(c), OutcomeHypothesis::II);
}

TEST(SwitchExperiment, CustomThreeSlitCarving) {
    // Switch on for bins 1 and 3 of five: a three-band on/off/on/off/off carving.
    auto c = stage_d(OutcomeHypothesis::II, SwitchStrategy::custom({false, true, false, true, false}), 20000);
    const auto r = run_switch_experiment(c);
    const OpticsConfig optics;
    const auto region = c.strategy->activation_region(optics);
    EXPECT_EQ(region.size(), 2u);
    for (const auto& e : r.events)
        EXPECT_EQ(*e.switch_on, region.contains(*e.signal_x));
    EXPECT_EQ(verdict(r, "switch_on"), Verdict::Particle);
    EXPECT_EQ(verdict(r, "switch_off"), Verdict::Particle);
}

TEST(SwitchExperiment, MicroprocessorMarker) {
    auto c = stage_d(OutcomeHypothesis::II, SwitchStrategy::always_off(), 100);
    c.microprocessor_switch = true;
    c.delta_t_s = presets::microprocessor_delay_s;
    c.coincidence_window_s = 1e-5;
    EXPECT_TRUE(run_switch_experiment(c).has_marker(markers::microprocessor_switch));
}

TEST(PerishableMedia, EquivalentRecordingIsBranchA) {
    const auto r = run_perishable_media(config(Protocol::PerishableMedia, 10000));
    EXPECT_EQ(r.status, RunStatus::Completed);
    EXPECT_TRUE(r.has_marker(markers::branch_a));
    for (const auto& s : r.subsets) EXPECT_EQ(s.classification.verdict, Verdict::Particle) << s.name;
}

TEST(PerishableMedia, DistinctRecordingIsBranchB) {
    auto c = config(Protocol::PerishableMedia, 10000);
    c.subjective_recording = SubjectiveRecording::Distinct;
    const auto r = run_perishable_media(c);
    EXPECT_EQ(r.status, RunStatus::Refused);
    EXPECT_TRUE(r.has_marker(markers::branch_b));
    ASSERT_TRUE(r.feasibility);
    EXPECT_NEAR(r.feasibility->delta_value, 1.0 - 1.0 / oracle::pi, 1e-9);
    c.region_model = RegionModel::Disjoint;
    EXPECT_DOUBLE_EQ(run_perishable_media(c).feasibility->delta_value, 0.0);
}

TEST(PerishableMedia, InfiniteTtlMatchesNoDestruction) {
    auto c = config(Protocol::PerishableMedia, 10000);
    c.perishable_ttl_s = std::numeric_limits<double>::infinity();
    c.subjective_recording = SubjectiveRecording::Distinct;
    const auto r = run_perishable_media(c);
    EXPECT_EQ(r.status, RunStatus::Completed);
    EXPECT_EQ(r.pooled.classification.verdict, Verdict::Particle);
}

TEST(Determinism, ThreadCountDoesNotChangeDigest) {
    auto c = config(Protocol::QuantumEraser, 30000);
    RunOptions one{1, false};
    RunOptions four{4, false};
    EXPECT_EQ(run_protocol(c, one).event_digest, run_protocol(c, four).event_digest);
    const auto before = run_protocol(c, one).event_digest;
    c.seed = 18;
    EXPECT_NE(run_protocol(c, one).event_digest, before);
}

TEST(Coincidence, FaultyWindowIsReported) {
    auto c = config(Protocol::QuantumEraser, 1000);
    c.coincidence_window_s = 0.0;
    const auto r = run_quantum_eraser(c);
    EXPECT_EQ(r.unmatched, 1000u);
    EXPECT_FALSE(r.warnings.empty());
}
