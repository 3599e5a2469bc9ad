#include "rankclip/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rankclip/rng.hpp"

namespace rankclip {

namespace {

real dot(const real* a, const real* b, std::size_t n) {
    real s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void normalize(real* v, std::size_t n) {
    const real norm = std::sqrt(dot(v, v, n));
    if (norm < 1e-12) throw std::runtime_error("generate_dataset: degenerate direction");
    for (std::size_t i = 0; i < n; ++i) v[i] /= norm;
}

// Draw a unit vector orthogonal to the rows of `basis` (modified
// Gram-Schmidt). Once the ambient dimension is exhausted only the first
// dim-1 rows are honored; superclass directions come first in the basis, so
// those always stay exactly orthogonal. The recorded prototype similarity
// matrix uses realized dot products either way.
std::vector<real> fresh_direction(const std::vector<std::vector<real>>& basis, std::size_t dim,
                                  RngStream& rng) {
    const std::size_t count = std::min(basis.size(), dim - 1);
    for (int attempt = 0; attempt < 64; ++attempt) {
        std::vector<real> v(dim);
        for (real& x : v) x = rng.next_normal();
        for (std::size_t b = 0; b < count; ++b) {
            const real proj = dot(v.data(), basis[b].data(), dim);
            for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * basis[b][i];
        }
        const real norm = std::sqrt(dot(v.data(), v.data(), dim));
        if (norm > 1e-6) {
            for (real& x : v) x /= norm;
            return v;
        }
    }
    throw std::runtime_error("generate_dataset: could not draw an orthogonal direction");
}

std::vector<real> random_projection(std::size_t out_dim, std::size_t in_dim, RngStream& rng) {
    std::vector<real> w(out_dim * in_dim);
    const real scale = 1.0 / std::sqrt(static_cast<real>(in_dim));
    for (real& v : w) v = rng.next_normal() * scale;
    return w;
}

void apply_projection(const std::vector<real>& w, std::size_t out_dim, std::size_t in_dim,
                      const real* x, real* y) {
    for (std::size_t i = 0; i < out_dim; ++i) y[i] = dot(&w[i * in_dim], x, in_dim);
}

}  // namespace

PairedDataset generate_dataset(const DatasetSpec& spec) {
    const std::size_t s = spec.num_superclasses, b = spec.subclasses_per_superclass;
    const std::size_t c = spec.num_classes(), l = spec.latent_dim;
    if (c < 2) throw std::invalid_argument("generate_dataset: need at least 2 classes");
    if (spec.within_super_corr < 0.0 || spec.within_super_corr >= 1.0)
        throw std::invalid_argument("generate_dataset: within_super_corr must be in [0, 1)");
    if (spec.noise_std < 0.0)
        throw std::invalid_argument("generate_dataset: noise_std must be >= 0");
    if (l < s + 1)
        throw std::invalid_argument(
            "generate_dataset: latent_dim too small to host orthogonal superclass directions "
            "(need latent_dim >= num_superclasses + 1)");
    if (spec.pairs_per_class == 0)
        throw std::invalid_argument("generate_dataset: pairs_per_class must be >= 1");

    RngStream proto_rng = derive_stream(spec.seed, "prototypes");

    // Orthonormal superclass directions, then one fresh direction per
    // subclass: prototype = sqrt(rho) * u_super + sqrt(1-rho) * w_sub.
    std::vector<std::vector<real>> basis;
    for (std::size_t i = 0; i < s; ++i)
        basis.push_back(fresh_direction(basis, l, proto_rng));

    std::vector<std::vector<real>> prototypes;
    const real rho = spec.within_super_corr;
    const real wa = std::sqrt(rho), wb = std::sqrt(1.0 - rho);
    for (std::size_t si = 0; si < s; ++si)
        for (std::size_t bi = 0; bi < b; ++bi) {
            auto w = fresh_direction(basis, l, proto_rng);
            std::vector<real> p(l);
            for (std::size_t i = 0; i < l; ++i) p[i] = wa * basis[si][i] + wb * w[i];
            normalize(p.data(), l);
            basis.push_back(std::move(w));  // keep subclass directions mutually fresh
            prototypes.push_back(std::move(p));
        }

    PairedDataset ds;
    ds.image_dim = spec.image_dim;
    ds.text_dim = spec.text_dim;
    ds.num_classes = c;
    ds.class_prototype_sim.resize(c * c);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j)
            ds.class_prototype_sim[i * c + j] = dot(prototypes[i].data(), prototypes[j].data(), l);

    RngStream wimg_rng = derive_stream(spec.seed, "proj/image");
    RngStream wtxt_rng = derive_stream(spec.seed, "proj/text");
    const std::vector<real> w_img = random_projection(spec.image_dim, l, wimg_rng);
    const std::vector<real> w_txt = random_projection(spec.text_dim, l, wtxt_rng);

    const std::size_t train_total = c * spec.pairs_per_class;
    ds.num_pairs = train_total + spec.eval_pairs;
    ds.image_raw.resize(ds.num_pairs * spec.image_dim);
    ds.text_raw.resize(ds.num_pairs * spec.text_dim);
    ds.labels.resize(ds.num_pairs);
    ds.split.resize(ds.num_pairs);

    RngStream noise_img = derive_stream(spec.seed, "noise/image");
    RngStream noise_txt = derive_stream(spec.seed, "noise/text");
    std::vector<real> latent(l);

    auto emit_pair = [&](std::size_t row, std::uint32_t cls, std::uint8_t tag) {
        ds.labels[row] = cls;
        ds.split[row] = tag;
        const auto& proto = prototypes[cls];
        for (std::size_t i = 0; i < l; ++i)
            latent[i] = proto[i] + spec.noise_std * noise_img.next_normal();
        apply_projection(w_img, spec.image_dim, l, latent.data(), &ds.image_raw[row * spec.image_dim]);
        for (std::size_t i = 0; i < l; ++i)
            latent[i] = proto[i] + spec.noise_std * noise_txt.next_normal();
        apply_projection(w_txt, spec.text_dim, l, latent.data(), &ds.text_raw[row * spec.text_dim]);
    };

    std::size_t row = 0;
    for (std::uint32_t cls = 0; cls < c; ++cls)
        for (std::size_t k = 0; k < spec.pairs_per_class; ++k) emit_pair(row++, cls, 0);
    for (std::size_t k = 0; k < spec.eval_pairs; ++k)
        emit_pair(row++, static_cast<std::uint32_t>(k % c), 1);

    return ds;
}

std::vector<std::size_t> PairedDataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < num_pairs; ++i)
        if (split[i] == 0) out.push_back(i);
    return out;
}

std::vector<std::size_t> PairedDataset::eval_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < num_pairs; ++i)
        if (split[i] == 1) out.push_back(i);
    return out;
}

std::vector<real> PairedDataset::class_text_means() const {
    std::vector<real> sums(num_classes * text_dim, 0.0);
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t i = 0; i < num_pairs; ++i) {
        if (split[i] != 0) continue;
        const std::uint32_t cls = labels[i];
        counts[cls] += 1;
        for (std::size_t j = 0; j < text_dim; ++j)
            sums[cls * text_dim + j] += text_raw[i * text_dim + j];
    }
    for (std::size_t cls = 0; cls < num_classes; ++cls) {
        if (counts[cls] == 0)
            throw std::runtime_error("class_text_means: class has no train samples");
        for (std::size_t j = 0; j < text_dim; ++j)
            sums[cls * text_dim + j] /= static_cast<real>(counts[cls]);
    }
    return sums;
}

Tensor PairedDataset::image_rows(const std::vector<std::size_t>& indices) const {
    std::vector<real> out(indices.size() * image_dim);
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::memcpy(&out[r * image_dim], &image_raw[indices[r] * image_dim],
                    image_dim * sizeof(real));
    return Tensor::from_data(indices.size(), image_dim, std::move(out));
}

Tensor PairedDataset::text_rows(const std::vector<std::size_t>& indices) const {
    std::vector<real> out(indices.size() * text_dim);
    for (std::size_t r = 0; r < indices.size(); ++r)
        std::memcpy(&out[r * text_dim], &text_raw[indices[r] * text_dim], text_dim * sizeof(real));
    return Tensor::from_data(indices.size(), text_dim, std::move(out));
}

std::vector<Batch> batch_iter(const PairedDataset& ds, std::size_t batch_size,
                              std::uint64_t epoch_seed) {
    if (batch_size < 2) throw std::invalid_argument("batch_iter: batch_size must be >= 2");
    std::vector<std::size_t> train = ds.train_indices();
    if (train.empty()) throw std::invalid_argument("batch_iter: dataset has no train split");

    RngStream rng(epoch_seed);
    rng.shuffle(train.data(), train.size());

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < train.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, train.size() - start);
        if (count < 2) break;  // drop a trailing remainder of one
        std::vector<std::size_t> ix(train.begin() + static_cast<std::ptrdiff_t>(start),
                                    train.begin() + static_cast<std::ptrdiff_t>(start + count));
        Batch b;
        b.images = ds.image_rows(ix);
        b.texts = ds.text_rows(ix);
        b.labels.reserve(count);
        for (std::size_t i : ix) b.labels.push_back(ds.labels[i]);
        batches.push_back(std::move(b));
    }
    return batches;
}

// ---- file format -----------------------------------------------------------
// magic "RCLD", version u16, then little-endian: image_dim u32, text_dim u32,
// M u64, C u32, image_raw f64[M*image_dim], text_raw f64[M*text_dim],
// labels u32[M], class_prototype_sim f64[C*C], split u8[M].

namespace {

constexpr char kDatasetMagic[4] = {'R', 'C', 'L', 'D'};
constexpr std::uint16_t kDatasetVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& is, T& v, const char* what) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error(std::string("load_dataset: truncated file reading ") + what);
}

template <typename T>
void write_vec(std::ofstream& os, const std::vector<T>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
void read_vec(std::ifstream& is, std::vector<T>& v, std::size_t count, const char* what) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T)));
    if (!is) throw std::runtime_error(std::string("load_dataset: truncated file reading ") + what);
}

}  // namespace

void save_dataset(const PairedDataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_dataset: cannot open '" + path + "' for writing");
    os.write(kDatasetMagic, 4);
    write_pod(os, kDatasetVersion);
    write_pod(os, static_cast<std::uint32_t>(ds.image_dim));
    write_pod(os, static_cast<std::uint32_t>(ds.text_dim));
    write_pod(os, static_cast<std::uint64_t>(ds.num_pairs));
    write_pod(os, static_cast<std::uint32_t>(ds.num_classes));
    write_vec(os, ds.image_raw);
    write_vec(os, ds.text_raw);
    write_vec(os, ds.labels);
    write_vec(os, ds.class_prototype_sim);
    write_vec(os, ds.split);
    if (!os) throw std::runtime_error("save_dataset: write failed for '" + path + "'");
}

PairedDataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw std::runtime_error("load_dataset: bad magic");
    std::uint16_t version = 0;
    read_pod(is, version, "version");
    if (version != kDatasetVersion)
        throw std::runtime_error("load_dataset: unsupported version " + std::to_string(version));

    std::uint32_t image_dim = 0, text_dim = 0, num_classes = 0;
    std::uint64_t m = 0;
    read_pod(is, image_dim, "image_dim");
    read_pod(is, text_dim, "text_dim");
    read_pod(is, m, "pair count");
    read_pod(is, num_classes, "class count");

    PairedDataset ds;
    ds.image_dim = image_dim;
    ds.text_dim = text_dim;
    ds.num_pairs = m;
    ds.num_classes = num_classes;
    read_vec(is, ds.image_raw, static_cast<std::size_t>(m) * image_dim, "image_raw");
    read_vec(is, ds.text_raw, static_cast<std::size_t>(m) * text_dim, "text_raw");
    read_vec(is, ds.labels, m, "labels");
    read_vec(is, ds.class_prototype_sim, static_cast<std::size_t>(num_classes) * num_classes,
             "class_prototype_sim");
    read_vec(is, ds.split, m, "split tags");
    return ds;
}

}  // namespace rankclip
