#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "physioml/corpus_io.hpp"
#include "physioml/synth.hpp"

using namespace physioml;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("physioml_ingest_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

std::string trace_csv(double rate_hz, std::size_t n, double value) {
    std::string s = "time_s,value\n";
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "%.9f,%.17g\n", static_cast<double>(i) / rate_hz, value);
        s += buf;
    }
    return s;
}

}  // namespace

TEST_CASE("smallest valid corpus loads from a manifest", "[ingest]") {
    TempDir dir;
    write_file(dir.path / "ecg.csv", trace_csv(250.0, 2500, 0.1));
    write_file(dir.path / "eda.csv", trace_csv(50.0, 500, 2.0));
    write_file(dir.path / "manifest.txt",
               "corpus tiny\n"
               "scheme SUDS\n"
               "participant p001\n"
               "phase baseline ecg=ecg.csv ecg_rate=250 eda=eda.csv eda_rate=50 report=SUDS:42\n");
    const Corpus c = load_corpus((dir.path / "manifest.txt").string());
    REQUIRE(c.name == "tiny");
    REQUIRE(c.label_scheme == LabelScheme::suds);
    REQUIRE(c.phases.size() == 1);
    REQUIRE(c.phases[0].participant_id == "p001");
    REQUIRE(c.phases[0].ecg.samples.size() == 2500);
    REQUIRE(c.phases[0].self_report.scalar_score == Catch::Approx(42.0));
}

TEST_CASE("a manifest referencing an absent trace fails with MissingFile", "[ingest]") {
    TempDir dir;
    write_file(dir.path / "eda.csv", trace_csv(50.0, 500, 2.0));
    write_file(dir.path / "manifest.txt",
               "corpus tiny\nscheme SUDS\nparticipant p001\n"
               "phase baseline ecg=gone.csv ecg_rate=250 eda=eda.csv eda_rate=50 report=SUDS:42\n");
    try {
        load_corpus((dir.path / "manifest.txt").string());
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::missing_file);
    }
}

TEST_CASE("mixed schemes in one corpus fail with SchemeMismatch", "[ingest]") {
    TempDir dir;
    write_file(dir.path / "ecg.csv", trace_csv(250.0, 2500, 0.1));
    write_file(dir.path / "eda.csv", trace_csv(50.0, 500, 2.0));
    write_file(dir.path / "manifest.txt",
               "corpus mixed\nscheme SUDS\nparticipant p001\n"
               "phase a ecg=ecg.csv ecg_rate=250 eda=eda.csv eda_rate=50 report=SUDS:42\n"
               "phase b ecg=ecg.csv ecg_rate=250 eda=eda.csv eda_rate=50 report=STAI6:12\n");
    try {
        load_corpus((dir.path / "manifest.txt").string());
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::scheme_mismatch);
    }
}

TEST_CASE("a phase line without rates fails with RateMissing", "[ingest]") {
    TempDir dir;
    write_file(dir.path / "ecg.csv", trace_csv(250.0, 2500, 0.1));
    write_file(dir.path / "eda.csv", trace_csv(50.0, 500, 2.0));
    write_file(dir.path / "manifest.txt",
               "corpus tiny\nscheme SUDS\nparticipant p001\n"
               "phase baseline ecg=ecg.csv eda=eda.csv report=SUDS:42\n");
    try {
        load_corpus((dir.path / "manifest.txt").string());
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::rate_missing);
        REQUIRE(e.index() == 4);
    }
}

TEST_CASE("parse errors carry the offending line number", "[ingest]") {
    TempDir dir;
    write_file(dir.path / "manifest.txt", "corpus tiny\nscheme SUDS\nbogus directive\n");
    try {
        load_corpus((dir.path / "manifest.txt").string());
        FAIL("expected an error");
    } catch (const Error& e) {
        REQUIRE(e.code() == Errc::parse_error);
        REQUIRE(e.index() == 3);
    }
}

TEST_CASE("export/load round-trips a synthetic corpus exactly", "[ingest]") {
    SynthConfig cfg;
    cfg.corpus_name = "round";
    cfg.label_scheme = LabelScheme::arousal_continuous;
    cfg.n_participants = 2;
    cfg.phases = {{"calm", 130.0, 0.1}, {"tense", 130.0, 0.8}};
    cfg.noise_std = 0.04;
    cfg.rr_jitter_ms = 10.0;
    cfg.seed = 7;
    auto [corpus, truth] = synth_corpus(cfg);

    TempDir dir;
    const std::string manifest = export_corpus(corpus, &truth, dir.path.string());
    const Corpus back = load_corpus(manifest);

    REQUIRE(back.name == corpus.name);
    REQUIRE(back.label_scheme == corpus.label_scheme);
    REQUIRE(back.phases.size() == corpus.phases.size());
    for (std::size_t i = 0; i < corpus.phases.size(); ++i) {
        REQUIRE(back.phases[i].participant_id == corpus.phases[i].participant_id);
        REQUIRE(back.phases[i].phase_name == corpus.phases[i].phase_name);
        REQUIRE(back.phases[i].ecg.samples == corpus.phases[i].ecg.samples);  // bit-exact
        REQUIRE(back.phases[i].eda.samples == corpus.phases[i].eda.samples);
        REQUIRE(back.phases[i].ecg.sampling_rate_hz == corpus.phases[i].ecg.sampling_rate_hz);
        REQUIRE(*back.phases[i].self_report.series == *corpus.phases[i].self_report.series);
    }

    const GroundTruth t2 = read_ground_truth((dir.path / "ground_truth.json").string());
    REQUIRE(t2.phases.size() == truth.phases.size());
    REQUIRE(t2.phases[1].beat_times_s == truth.phases[1].beat_times_s);
    REQUIRE(t2.phases[1].rr_ms == truth.phases[1].rr_ms);
    REQUIRE(t2.phases[1].label == truth.phases[1].label);
}

TEST_CASE("a corrupted trace row surfaces as ParseError", "[ingest]") {
    SynthConfig cfg;
    cfg.n_participants = 1;
    cfg.phases = {{"calm", 130.0, 0.2}};
    auto [corpus, truth] = synth_corpus(cfg);

    TempDir dir;
    const std::string manifest = export_corpus(corpus, nullptr, dir.path.string());
    // Corrupt one row of the first trace file.
    fs::path trace;
    for (const auto& entry : fs::directory_iterator(dir.path / "traces")) {
        trace = entry.path();
        break;
    }
    std::ifstream in(trace);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    content.replace(content.find(',', 30), 1, ";");
    write_file(trace, content);

    REQUIRE_THROWS_AS(load_corpus(manifest), Error);
}

TEST_CASE("an empty corpus exports to a valid zero-participant manifest", "[ingest]") {
    Corpus empty;
    empty.name = "empty";
    empty.label_scheme = LabelScheme::stai6;
    TempDir dir;
    const std::string manifest = export_corpus(empty, nullptr, dir.path.string());
    const Corpus back = load_corpus(manifest);
    REQUIRE(back.phases.empty());
    REQUIRE(back.name == "empty");
    REQUIRE(back.label_scheme == LabelScheme::stai6);
}

TEST_CASE("export is deterministic for equal corpora", "[ingest]") {
    SynthConfig cfg;
    cfg.n_participants = 1;
    cfg.phases = {{"calm", 125.0, 0.5}};
    cfg.seed = 3;
    auto [c1, t1] = synth_corpus(cfg);
    auto [c2, t2] = synth_corpus(cfg);

    TempDir d1, d2;
    export_corpus(c1, &t1, d1.path.string());
    export_corpus(c2, &t2, d2.path.string());
    for (const char* rel : {"manifest.txt", "ground_truth.json"}) {
        std::ifstream f1(d1.path / rel), f2(d2.path / rel);
        const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        REQUIRE(s1 == s2);
    }
}
