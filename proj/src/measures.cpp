#include "srb/measures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "srb/rng.hpp"

namespace srb {

namespace {

constexpr double kPi = 3.14159265358979323846;

} // namespace

GridHistogram::GridHistogram(const Box& b, const std::vector<int>& res)
    : box(b), resolution(res) {
    std::size_t cells = 1;
    for (int r : res) {
        if (r <= 0) throw GridMismatch("non-positive grid resolution");
        cells *= static_cast<std::size_t>(r);
    }
    if (static_cast<int>(res.size()) != b.dimension()) {
        throw GridMismatch("grid rank does not match box dimension");
    }
    masses.assign(cells, 0.0);
}

long GridHistogram::cell_index(const Vec& x) const {
    long flat = 0;
    for (int i = 0; i < dimension(); ++i) {
        if (x[i] < box.lo[i] || x[i] > box.hi[i]) return -1;
        double t = (x[i] - box.lo[i]) / box.width(i);
        int idx = static_cast<int>(t * resolution[i]);
        if (idx >= resolution[i]) idx = resolution[i] - 1;
        flat = flat * resolution[i] + idx;
    }
    return flat;
}

Vec GridHistogram::cell_center(long flat) const {
    const int d = dimension();
    Vec c(d);
    for (int i = d - 1; i >= 0; --i) {
        int idx = static_cast<int>(flat % resolution[i]);
        flat /= resolution[i];
        c[i] = box.lo[i] + (idx + 0.5) * cell_width(i);
    }
    return c;
}

void GridHistogram::deposit(const Vec& x, double weight) {
    long flat = cell_index(x);
    if (flat < 0) return;
    masses[static_cast<std::size_t>(flat)] += weight;
    total_mass += weight;
}

void GridHistogram::add(const GridHistogram& other) {
    if (!same_grid(other)) throw GridMismatch("cannot merge histograms on different grids");
    for (std::size_t c = 0; c < masses.size(); ++c) masses[c] += other.masses[c];
    total_mass += other.total_mass;
}

void GridHistogram::normalize() {
    if (total_mass <= 0.0) return;
    for (double& m : masses) m /= total_mass;
    total_mass = 1.0;
}

bool GridHistogram::same_grid(const GridHistogram& other) const {
    if (resolution != other.resolution) return false;
    for (int i = 0; i < dimension(); ++i) {
        if (box.lo[i] != other.box.lo[i] || box.hi[i] != other.box.hi[i]) return false;
    }
    return true;
}

double GridHistogram::integrate(const std::function<double(const Vec&)>& h) const {
    if (total_mass <= 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t c = 0; c < masses.size(); ++c) {
        if (masses[c] == 0.0) continue;
        s += masses[c] * h(cell_center(static_cast<long>(c)));
    }
    return s / total_mass;
}

double GridHistogram::l1_distance(const GridHistogram& other) const {
    if (!same_grid(other)) throw GridMismatch("L1 distance needs identical grids");
    double a = total_mass > 0.0 ? total_mass : 1.0;
    double b = other.total_mass > 0.0 ? other.total_mass : 1.0;
    double s = 0.0;
    for (std::size_t c = 0; c < masses.size(); ++c) {
        s += std::abs(masses[c] / a - other.masses[c] / b);
    }
    return s;
}

TestFunctionSuite TestFunctionSuite::standard(const Box& box) {
    TestFunctionSuite suite;
    const int d = box.dimension();
    auto coord = [box](int i) {
        return [box, i](const Vec& x) {
            return 2.0 * (x[i] - box.lo[i]) / box.width(i) - 1.0;
        };
    };
    for (int i = 0; i < d; ++i) {
        auto u = coord(i);
        double wi = box.width(i);
        suite.functions.push_back(
            {"lin" + std::to_string(i), [u](const Vec& x) { return u(x); }, 2.0 / wi});
        suite.functions.push_back({"quad" + std::to_string(i),
                                   [u](const Vec& x) { double v = u(x); return v * v; },
                                   4.0 / wi});
    }
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            auto ui = coord(i);
            auto uj = coord(j);
            double lip = std::hypot(2.0 / box.width(i), 2.0 / box.width(j));
            suite.functions.push_back({"cross" + std::to_string(i) + std::to_string(j),
                                       [ui, uj](const Vec& x) { return ui(x) * uj(x); },
                                       lip});
        }
    }
    for (int i = 0; i < d; ++i) {
        double lo = box.lo[i], w = box.width(i);
        suite.functions.push_back(
            {"sin" + std::to_string(i),
             [lo, w, i](const Vec& x) { return std::sin(2.0 * kPi * (x[i] - lo) / w); },
             2.0 * kPi / w});
        suite.functions.push_back(
            {"cos" + std::to_string(i),
             [lo, w, i](const Vec& x) { return std::cos(2.0 * kPi * (x[i] - lo) / w); },
             2.0 * kPi / w});
    }
    return suite;
}

Vec wrap_to_box(const SystemHandle& sys, const Vec& x) {
    Vec y = x;
    if (sys.axis_period.size() != sys.dimension) return y;
    for (int i = 0; i < sys.dimension; ++i) {
        double p = sys.axis_period[i];
        if (p <= 0.0) continue;
        double lo = sys.trapping_region.lo[i];
        double t = std::fmod(y[i] - lo, p);
        if (t < 0.0) t += p;
        y[i] = lo + t;
    }
    return y;
}

Vec sample_domain_point(const SystemHandle& sys, std::uint64_t seed,
                        std::uint64_t index) {
    auto rng = make_stream(seed, index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int d = sys.dimension;
    Vec x(d);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        for (int i = 0; i < d; ++i) {
            x[i] = sys.trapping_region.lo[i] + unit(rng) * sys.trapping_region.width(i);
        }
        if (sys.in_domain(x)) return x;
    }
    throw EmptyEnsemble("rejection sampling failed to hit the domain of '" +
                        sys.name + "'");
}

namespace {

struct BlockResult {
    std::vector<std::vector<double>> masses; // one vector per checkpoint
    std::vector<double> totals;
    int early_halts = 0;
};

// Iterate one orbit, depositing its first `cp` points into each checkpoint
// layer. Returns the number of points recorded.
template <typename Deposit>
int run_depositing_orbit(const SystemHandle& sys, Vec x, int n_max,
                         const Deposit& deposit, bool* completed) {
    *completed = true;
    int recorded = 0;
    for (int k = 0; k < n_max; ++k) {
        deposit(x, k);
        ++recorded;
        if (sys.is_singular() && sys.singularity_distance(x) < 1e-12) {
            *completed = false;
            return recorded;
        }
        Vec next = sys.map(x);
        if (!sys.in_domain(next)) {
            *completed = false;
            return recorded;
        }
        x = next;
    }
    return recorded;
}

std::vector<int> checkpoint_steps(int n) {
    return {std::max(1, n / 4), std::max(1, n / 2), n};
}

Checkpoints merge_blocks(const SystemHandle& sys, const std::vector<int>& grid,
                         const std::vector<int>& steps,
                         std::vector<BlockResult>& blocks) {
    Checkpoints out;
    out.steps = steps;
    for (std::size_t c = 0; c < steps.size(); ++c) {
        GridHistogram h(sys.trapping_region, grid);
        for (const BlockResult& b : blocks) {
            for (std::size_t cell = 0; cell < h.masses.size(); ++cell) {
                h.masses[cell] += b.masses[c][cell];
            }
            h.total_mass += b.totals[c];
        }
        h.normalize();
        out.histograms.push_back(std::move(h));
    }
    return out;
}

} // namespace

Checkpoints pushforward_lebesgue(const SystemHandle& sys, int n, int ensemble,
                                 const std::vector<int>& grid, std::uint64_t seed,
                                 int workers) {
    if (ensemble <= 0) throw EmptyEnsemble("push-forward needs a non-empty ensemble");
    if (n <= 0) throw EmptyEnsemble("push-forward needs at least one step");
    workers = std::max(1, workers);

    const std::vector<int> steps = checkpoint_steps(n);
    const int block_size = 1024;
    const int n_blocks = (ensemble + block_size - 1) / block_size;

    GridHistogram proto(sys.trapping_region, grid);
    std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));
    std::atomic<int> next_block{0};

    auto worker = [&]() {
        for (;;) {
            int b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            BlockResult res;
            res.masses.assign(steps.size(), std::vector<double>(proto.masses.size(), 0.0));
            res.totals.assign(steps.size(), 0.0);
            int first = b * block_size;
            int last = std::min(ensemble, first + block_size);
            for (int i = first; i < last; ++i) {
                Vec x0 = sample_domain_point(sys, seed, static_cast<std::uint64_t>(i));
                bool completed = false;
                auto deposit = [&](const Vec& x, int k) {
                    long flat = proto.cell_index(wrap_to_box(sys, x));
                    if (flat < 0) return;
                    for (std::size_t c = 0; c < steps.size(); ++c) {
                        if (k < steps[c]) {
                            res.masses[c][static_cast<std::size_t>(flat)] += 1.0;
                            res.totals[c] += 1.0;
                        }
                    }
                };
                int recorded = run_depositing_orbit(sys, x0, n, deposit, &completed);
                if (!completed && recorded < 10) ++res.early_halts;
            }
            blocks[static_cast<std::size_t>(b)] = std::move(res);
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    int early = 0;
    for (const BlockResult& b : blocks) early += b.early_halts;
    if (2 * early > ensemble) {
        throw DegenerateEnsemble("more than half of the ensemble halted before 10 steps");
    }
    return merge_blocks(sys, grid, steps, blocks);
}

Checkpoints pushforward_leaf(const SystemHandle& sys, const LeafSegment& leaf,
                             int n, const std::vector<int>& grid, int workers) {
    if (leaf.samples.size() < 2) throw InvalidLeaf("leaf has fewer than two samples");
    if (n <= 0) throw EmptyEnsemble("push-forward needs at least one step");
    workers = std::max(1, workers);

    const std::vector<int> steps = checkpoint_steps(n);
    const int total = static_cast<int>(leaf.samples.size());
    const int block_size = 128;
    const int n_blocks = (total + block_size - 1) / block_size;

    GridHistogram proto(sys.trapping_region, grid);
    std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));
    std::atomic<int> next_block{0};
    std::atomic<int> early_halts{0};

    auto worker = [&]() {
        for (;;) {
            int b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            BlockResult res;
            res.masses.assign(steps.size(), std::vector<double>(proto.masses.size(), 0.0));
            res.totals.assign(steps.size(), 0.0);
            int first = b * block_size;
            int last = std::min(total, first + block_size);
            for (int i = first; i < last; ++i) {
                double w = leaf.weights[static_cast<std::size_t>(i)];
                bool completed = false;
                auto deposit = [&](const Vec& x, int k) {
                    long flat = proto.cell_index(wrap_to_box(sys, x));
                    if (flat < 0) return;
                    for (std::size_t c = 0; c < steps.size(); ++c) {
                        if (k < steps[c]) {
                            res.masses[c][static_cast<std::size_t>(flat)] += w;
                            res.totals[c] += w;
                        }
                    }
                };
                int recorded = run_depositing_orbit(
                    sys, leaf.samples[static_cast<std::size_t>(i)], n, deposit,
                    &completed);
                if (!completed && recorded < 10) early_halts.fetch_add(1);
            }
            blocks[static_cast<std::size_t>(b)] = std::move(res);
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (2 * early_halts.load() > total) {
        throw DegenerateEnsemble("more than half of the leaf samples halted before 10 steps");
    }
    return merge_blocks(sys, grid, steps, blocks);
}

double weak_star_distance(const GridHistogram& mu, const GridHistogram& nu,
                          const TestFunctionSuite& suite) {
    if (!mu.same_grid(nu)) throw GridMismatch("weak-star distance needs identical grids");
    double worst = 0.0;
    for (const TestFunction& h : suite.functions) {
        worst = std::max(worst, std::abs(mu.integrate(h.eval) - nu.integrate(h.eval)));
    }
    return worst;
}

DefectEstimate invariance_defect(const SystemHandle& sys, const GridHistogram& mu,
                                 const TestFunctionSuite& suite, int probe,
                                 std::uint64_t seed) {
    probe = std::max(1, probe);
    const std::size_t nf = suite.functions.size();
    std::vector<double> pushed(nf, 0.0);   // int h(f x) dmu
    std::vector<double> variance(nf, 0.0); // MC variance of the above
    std::vector<double> plain(nf, 0.0);    // int h dmu
    double norm = mu.total_mass > 0.0 ? mu.total_mass : 1.0;

    for (std::size_t c = 0; c < mu.masses.size(); ++c) {
        double m = mu.masses[c] / norm;
        if (m == 0.0) continue;
        Vec center = mu.cell_center(static_cast<long>(c));
        for (std::size_t f = 0; f < nf; ++f) plain[f] += m * suite.functions[f].eval(center);

        auto rng = make_stream(seed, static_cast<std::uint64_t>(c));
        std::uniform_real_distribution<double> unit(-0.5, 0.5);
        std::vector<double> sum(nf, 0.0), sumsq(nf, 0.0);
        int kept = 0;
        for (int p = 0; p < probe; ++p) {
            Vec x = center;
            for (int i = 0; i < mu.dimension(); ++i) x[i] += unit(rng) * mu.cell_width(i);
            Vec y;
            try {
                y = evaluate_map(sys, x);
            } catch (const SingularInput&) {
                continue;
            }
            y = wrap_to_box(sys, y);
            ++kept;
            for (std::size_t f = 0; f < nf; ++f) {
                double v = suite.functions[f].eval(y);
                sum[f] += v;
                sumsq[f] += v * v;
            }
        }
        if (kept == 0) continue;
        for (std::size_t f = 0; f < nf; ++f) {
            double mean = sum[f] / kept;
            pushed[f] += m * mean;
            double var = kept > 1 ? (sumsq[f] / kept - mean * mean) / (kept - 1) : 0.0;
            variance[f] += m * m * std::max(0.0, var);
        }
    }

    DefectEstimate out;
    for (std::size_t f = 0; f < nf; ++f) {
        out.value = std::max(out.value, std::abs(pushed[f] - plain[f]));
        out.error_bar = std::max(out.error_bar, std::sqrt(variance[f]));
    }
    return out;
}

BirkhoffResult birkhoff_average(const SystemHandle& sys, const Vec& x,
                                const std::function<double(const Vec&)>& h, int n) {
    BirkhoffResult res;
    Vec p = x;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        sum += h(wrap_to_box(sys, p));
        ++res.steps;
        if (sys.is_singular() && sys.singularity_distance(p) < 1e-12) {
            res.truncated = true;
            break;
        }
        if (k + 1 < n) {
            Vec next = sys.map(p);
            if (!sys.in_domain(next)) {
                res.truncated = true;
                break;
            }
            p = next;
        }
    }
    res.value = res.steps > 0 ? sum / res.steps : 0.0;
    return res;
}

double basin_fraction(const SystemHandle& sys, const GridHistogram& mu,
                      const TestFunctionSuite& suite, int sample, int n,
                      double tol, std::uint64_t seed, int workers) {
    if (sample <= 0) throw EmptySample("basin estimation needs a non-empty sample");
    workers = std::max(1, workers);
    const std::size_t nf = suite.functions.size();
    std::vector<double> reference(nf);
    for (std::size_t f = 0; f < nf; ++f) reference[f] = mu.integrate(suite.functions[f].eval);

    const int block_size = 64;
    const int n_blocks = (sample + block_size - 1) / block_size;
    std::vector<int> block_hits(static_cast<std::size_t>(n_blocks), 0);
    std::atomic<int> next_block{0};

    auto worker = [&]() {
        std::vector<double> sums(nf);
        for (;;) {
            int b = next_block.fetch_add(1);
            if (b >= n_blocks) return;
            int hits = 0;
            int first = b * block_size;
            int last = std::min(sample, first + block_size);
            for (int i = first; i < last; ++i) {
                Vec x = sample_domain_point(sys, seed, static_cast<std::uint64_t>(i));
                std::fill(sums.begin(), sums.end(), 0.0);
                bool completed = true;
                int recorded = 0;
                for (int k = 0; k < n; ++k) {
                    Vec w = wrap_to_box(sys, x);
                    for (std::size_t f = 0; f < nf; ++f) sums[f] += suite.functions[f].eval(w);
                    ++recorded;
                    if (sys.is_singular() && sys.singularity_distance(x) < 1e-12) {
                        completed = false;
                        break;
                    }
                    if (k + 1 < n) {
                        Vec next = sys.map(x);
                        if (!sys.in_domain(next)) {
                            completed = false;
                            break;
                        }
                        x = next;
                    }
                }
                if (!completed) continue;
                bool match = true;
                for (std::size_t f = 0; f < nf && match; ++f) {
                    if (std::abs(sums[f] / recorded - reference[f]) > tol) match = false;
                }
                if (match) ++hits;
            }
            block_hits[static_cast<std::size_t>(b)] = hits;
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    int hits = std::accumulate(block_hits.begin(), block_hits.end(), 0);
    return static_cast<double>(hits) / sample;
}

namespace {

// Working state of one leaf sample during growth: seed parameter, forward
// chain from the seed segment, and the df-propagated (normalized) tangents.
struct LeafStrand {
    double t = 0.0;
    std::vector<Vec> chain;
    std::vector<Vec> tangents;
    bool alive = true;
};

LeafStrand grow_strand(const SystemHandle& sys, const Vec& x_seed, const Vec& dir,
                       double t, int n_steps) {
    LeafStrand s;
    s.t = t;
    s.chain.push_back(x_seed + t * dir);
    s.tangents.push_back(dir);
    for (int k = 0; k < n_steps; ++k) {
        const Vec& p = s.chain.back();
        if (sys.is_singular() && sys.singularity_distance(p) < 1e-12) {
            s.alive = false;
            return s;
        }
        Vec next;
        Mat J;
        try {
            next = sys.map(p);
            J = sys.jacobian(p);
        } catch (const Error&) {
            s.alive = false;
            return s;
        }
        if (!sys.in_domain(wrap_to_box(sys, next))) {
            s.alive = false;
            return s;
        }
        Vec v = J * s.tangents.back();
        double nv = v.norm();
        if (!(nv > 0.0) || !std::isfinite(nv)) {
            s.alive = false;
            return s;
        }
        s.chain.push_back(wrap_to_box(sys, next));
        s.tangents.push_back(v / nv);
    }
    return s;
}

} // namespace

LeafSegment construct_unstable_leaf(const SystemHandle& sys, const Vec& x_seed,
                                    double target_length, int n_grow,
                                    const Cone& cone, double seed_length,
                                    int samples_per_length) {
    if (target_length <= 0.0 || n_grow <= 0) {
        throw LeafConstructionFailed("target length and growth steps must be positive");
    }
    if (!sys.in_domain(x_seed)) {
        throw LeafConstructionFailed("leaf seed outside the trapping region");
    }
    Vec dir = cone.center_direction;
    double nd = dir.norm();
    if (!(nd > 0.0)) throw ZeroVector("cone center direction is zero");
    dir /= nd;

    const double spacing = target_length / samples_per_length;
    // Seed segment c(t) = x_seed + t dir, t in [-L0/2, L0/2].
    std::vector<LeafStrand> strands;
    for (int i = 0; i < 5; ++i) {
        double t = seed_length * (static_cast<double>(i) / 4.0 - 0.5);
        LeafStrand s = grow_strand(sys, x_seed, dir, t, 0);
        strands.push_back(std::move(s));
    }

    auto base_index_of = [&]() {
        for (std::size_t i = 0; i < strands.size(); ++i) {
            if (strands[i].t == 0.0) return static_cast<long>(i);
        }
        return static_cast<long>(-1);
    };

    for (int step = 1; step <= n_grow; ++step) {
        // Advance every strand by one map application.
        std::vector<LeafStrand> next;
        for (LeafStrand& s : strands) {
            LeafStrand g = grow_strand(sys, x_seed, dir, s.t, step);
            if (g.alive || g.t == 0.0) next.push_back(std::move(g));
        }
        strands = std::move(next);
        if (strands.size() < 2 || base_index_of() < 0 || !strands[base_index_of()].alive) {
            throw LeafConstructionFailed("leaf orbit segment left the domain during growth");
        }

        // Refine: keep the gap between neighbouring image points below the
        // final sampling resolution, inserting seed-parameter midpoints and
        // recomputing their exact forward chains.
        bool changed = true;
        int guard = 0;
        while (changed && ++guard < 64) {
            changed = false;
            std::vector<LeafStrand> refined;
            refined.reserve(strands.size() * 2);
            for (std::size_t i = 0; i + 1 < strands.size(); ++i) {
                refined.push_back(std::move(strands[i]));
                const LeafStrand& a = refined.back();
                const LeafStrand& b = strands[i + 1];
                double gap = sys.metric_distance(a.chain.back(), b.chain.back());
                if (gap > spacing && std::abs(b.t - a.t) > 1e-18) {
                    LeafStrand mid = grow_strand(sys, x_seed, dir, 0.5 * (a.t + b.t), step);
                    if (mid.alive) {
                        refined.push_back(std::move(mid));
                        changed = true;
                    }
                }
            }
            refined.push_back(std::move(strands.back()));
            strands = std::move(refined);
        }

        // Trim to a window of roughly target_length around the base image so
        // the strand count stays bounded.
        long bi = base_index_of();
        double left = 0.0, right = 0.0;
        std::size_t lo = static_cast<std::size_t>(bi), hi = static_cast<std::size_t>(bi);
        while (lo > 0 && left < 0.75 * target_length) {
            left += sys.metric_distance(strands[lo - 1].chain.back(), strands[lo].chain.back());
            --lo;
        }
        while (hi + 1 < strands.size() && right < 0.75 * target_length) {
            right += sys.metric_distance(strands[hi].chain.back(), strands[hi + 1].chain.back());
            ++hi;
        }
        strands.assign(strands.begin() + static_cast<long>(lo),
                       strands.begin() + static_cast<long>(hi) + 1);
    }

    // Final symmetric trim to target_length.
    long bi = base_index_of();
    if (bi < 0) throw LeafConstructionFailed("base strand lost during growth");
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < strands.size(); ++i) {
        total += sys.metric_distance(strands[i].chain.back(), strands[i + 1].chain.back());
    }
    if (total < target_length) {
        throw LeafConstructionFailed("insufficient expansion to reach the target length");
    }
    double budget_left = 0.5 * target_length, budget_right = 0.5 * target_length;
    std::size_t lo = static_cast<std::size_t>(bi), hi = static_cast<std::size_t>(bi);
    auto gap_at = [&](std::size_t i) {
        return sys.metric_distance(strands[i].chain.back(), strands[i + 1].chain.back());
    };
    while (lo > 0 && budget_left > 0.0) {
        budget_left -= gap_at(lo - 1);
        --lo;
    }
    while (hi + 1 < strands.size() && budget_right > 0.0) {
        budget_right -= gap_at(hi);
        ++hi;
    }
    // Spill leftover budget to the other side when the seed image is near one
    // end of the grown curve.
    while (hi + 1 < strands.size() && budget_left > 0.0) {
        budget_left -= gap_at(hi);
        ++hi;
    }
    while (lo > 0 && budget_right > 0.0) {
        budget_right -= gap_at(lo - 1);
        --lo;
    }
    strands.assign(strands.begin() + static_cast<long>(lo),
                   strands.begin() + static_cast<long>(hi) + 1);
    if (strands.size() < 2) throw LeafConstructionFailed("trimmed leaf degenerate");

    LeafSegment leaf;
    leaf.n_history = n_grow;
    leaf.base_index = static_cast<int>(base_index_of());
    if (leaf.base_index < 0) throw LeafConstructionFailed("base strand trimmed away");
    for (const LeafStrand& s : strands) {
        const Vec& tangent = s.tangents.back();
        if (!cone_contains(cone, tangent)) {
            throw LeafConstructionFailed("propagated tangent left the unstable cone");
        }
        leaf.samples.push_back(s.chain.back());
        leaf.tangents.push_back(tangent);
        std::vector<Vec> back_chain, back_tan;
        for (int k = static_cast<int>(s.chain.size()) - 1; k >= 0; --k) {
            back_chain.push_back(s.chain[static_cast<std::size_t>(k)]);
            back_tan.push_back(s.tangents[static_cast<std::size_t>(k)]);
        }
        leaf.backward_chains.push_back(std::move(back_chain));
        leaf.backward_tangents.push_back(std::move(back_tan));
    }
    leaf.base_point = leaf.samples[static_cast<std::size_t>(leaf.base_index)];

    const std::size_t m = leaf.samples.size();
    leaf.arc_length.assign(m, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        leaf.arc_length[i] =
            leaf.arc_length[i - 1] + sys.metric_distance(leaf.samples[i - 1], leaf.samples[i]);
    }
    leaf.length = leaf.arc_length.back();
    leaf.weights.assign(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double seg = leaf.arc_length[i + 1] - leaf.arc_length[i];
        leaf.weights[i] += 0.5 * seg;
        leaf.weights[i + 1] += 0.5 * seg;
    }
    return leaf;
}

} // namespace srb
