#include "dcct/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dcct/rng.hpp"

namespace dcct {

void DatasetSpec::validate() const {
    if (n_identities < 1) throw ConfigError("n_identities must be >= 1");
    if (samples_per_identity < 1) throw ConfigError("samples_per_identity must be >= 1");
    if (d_in < 2) throw ConfigError("d_in must be >= 2");
    if (n_cameras < 1) throw ConfigError("n_cameras must be >= 1");
    if (intra_noise_sigma < 0) throw ConfigError("intra_noise_sigma must be >= 0");
    if (confusable_fraction < 0 || confusable_fraction > 1)
        throw ConfigError("confusable_fraction must be in [0,1]");
    if (confusable_gap <= 0 || confusable_gap > 2)
        throw ConfigError("confusable_gap must be in (0,2]");
    if (camera_distortion_scale < 0)
        throw ConfigError("camera_distortion_scale must be >= 0");
}

namespace {

Vector random_unit_vector(int d, Rng& rng) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.normal();
    double n = v.norm();
    if (n < 1e-12) {
        v.setZero();
        v(0) = 1.0;
        return v;
    }
    return v / n;
}

// Unit vector orthogonal to a.
Vector random_tangent(const Vector& a, Rng& rng) {
    Vector t = random_unit_vector(static_cast<int>(a.size()), rng);
    t -= t.dot(a) * a;
    double n = t.norm();
    while (n < 1e-8) {
        t = random_unit_vector(static_cast<int>(a.size()), rng);
        t -= t.dot(a) * a;
        n = t.norm();
    }
    return t / n;
}

}  // namespace

Dataset generate(const DatasetSpec& spec) {
    spec.validate();
    Rng rng(spec.seed * 0x9e3779b97f4a7c15ULL + 1);

    Dataset ds;
    ds.identities.reserve(spec.n_identities);
    for (int id = 0; id < spec.n_identities; ++id) {
        ds.identities.push_back({id, random_unit_vector(spec.d_in, rng)});
    }

    // Pull a fraction of identity pairs to within confusable_gap chordal
    // distance of each other. Pairs are disjoint: (0,1), (2,3), ...
    int n_pairs = static_cast<int>(std::floor(
        spec.confusable_fraction * spec.n_identities / 2.0));
    double phi = 2.0 * std::asin(std::min(1.0, spec.confusable_gap / 2.0));
    for (int p = 0; p < n_pairs; ++p) {
        const Vector& a = ds.identities[2 * p].center;
        Vector t = random_tangent(a, rng);
        ds.identities[2 * p + 1].center = std::cos(phi) * a + std::sin(phi) * t;
    }

    // Per-camera fixed distortion: I + scale * skew, near-orthogonal for
    // small scales.
    std::vector<Matrix> camera_maps;
    camera_maps.reserve(spec.n_cameras);
    for (int c = 0; c < spec.n_cameras; ++c) {
        Matrix a(spec.d_in, spec.d_in);
        for (int i = 0; i < spec.d_in; ++i)
            for (int j = 0; j < spec.d_in; ++j) a(i, j) = rng.normal();
        a /= std::sqrt(static_cast<double>(spec.d_in));
        Matrix skew = 0.5 * (a - a.transpose());
        camera_maps.push_back(Matrix::Identity(spec.d_in, spec.d_in) +
                              spec.camera_distortion_scale * skew);
    }

    int index = 0;
    for (int id = 0; id < spec.n_identities; ++id) {
        for (int j = 0; j < spec.samples_per_identity; ++j) {
            Sample s;
            s.index = index++;
            s.identity = id;
            s.camera = j % spec.n_cameras;  // round-robin: >= 2 cameras per id
            Vector noise(spec.d_in);
            for (int k = 0; k < spec.d_in; ++k) noise(k) = rng.normal();
            s.input = camera_maps[s.camera] * ds.identities[id].center +
                      spec.intra_noise_sigma * noise;
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

QueryGallerySplit split_query_gallery(const std::vector<Sample>& samples,
                                      double query_fraction,
                                      std::uint64_t seed) {
    if (query_fraction <= 0 || query_fraction >= 1)
        throw ConfigError("query_fraction must be in (0,1)");
    Rng rng(seed * 0x2545f4914f6cdd1dULL + 7);

    std::unordered_map<int, std::vector<int>> by_identity;
    for (const auto& s : samples) by_identity[s.identity].push_back(s.index);

    QueryGallerySplit split;
    std::unordered_set<int> query_set;

    std::vector<int> ids;
    ids.reserve(by_identity.size());
    for (const auto& [id, _] : by_identity) ids.push_back(id);
    std::sort(ids.begin(), ids.end());

    for (int id : ids) {
        auto group = by_identity[id];
        std::sort(group.begin(), group.end());
        rng.shuffle(group);
        int want = static_cast<int>(std::lround(query_fraction * group.size()));
        int taken = 0;
        for (int gi = 0; gi < static_cast<int>(group.size()) && taken < want; ++gi) {
            int cand = group[gi];
            // Keep as query only if the rest of the group retains a sample on
            // a different camera (the cross-camera matching rule).
            bool has_cross = false;
            for (int gj = 0; gj < static_cast<int>(group.size()); ++gj) {
                if (gj == gi) continue;
                if (query_set.count(group[gj])) continue;
                if (samples[group[gj]].camera != samples[cand].camera) {
                    has_cross = true;
                    break;
                }
            }
            if (has_cross) {
                query_set.insert(cand);
                ++taken;
            }
        }
        if (taken == 0) ++split.skipped_identities;
    }

    for (const auto& s : samples) {
        if (query_set.count(s.index))
            split.query_indices.push_back(s.index);
        else
            split.gallery_indices.push_back(s.index);
    }
    return split;
}

void save_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    int d = ds.samples.empty() ? 0 : static_cast<int>(ds.samples[0].input.size());
    out << "index,identity,camera";
    for (int k = 0; k < d; ++k) out << ",f" << k;
    out << "\n";
    out.precision(17);
    for (const auto& s : ds.samples) {
        out << s.index << "," << s.identity << "," << s.camera;
        for (int k = 0; k < d; ++k) out << "," << s.input(k);
        out << "\n";
    }
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    int d = -3;  // header: index, identity, camera, f0..f(d-1)
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) ++d;
    }
    if (d < 1) throw std::runtime_error("bad header in: " + path);

    Dataset ds;
    std::unordered_set<int> seen_ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        Sample s;
        std::getline(ss, tok, ',');
        s.index = std::stoi(tok);
        std::getline(ss, tok, ',');
        s.identity = std::stoi(tok);
        std::getline(ss, tok, ',');
        s.camera = std::stoi(tok);
        s.input.resize(d);
        for (int k = 0; k < d; ++k) {
            if (!std::getline(ss, tok, ','))
                throw std::runtime_error("short row in: " + path);
            s.input(k) = std::stod(tok);
        }
        seen_ids.insert(s.identity);
        ds.samples.push_back(std::move(s));
    }
    // Reconstruct identity stubs; centers are unknown after a round trip.
    for (int id : seen_ids) {
        Identity ident;
        ident.id = id;
        ds.identities.push_back(ident);
    }
    std::sort(ds.identities.begin(), ds.identities.end(),
              [](const Identity& a, const Identity& b) { return a.id < b.id; });
    return ds;
}

}  // namespace dcct
