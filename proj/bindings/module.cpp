#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rankclip/dataset.hpp"
#include "rankclip/losses.hpp"
#include "rankclip/metrics.hpp"

namespace py = pybind11;
using namespace rankclip;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                         const char* what) {
    if (a.ndim() != 2) throw std::invalid_argument(std::string(what) + ": expected a 2-D array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    std::vector<real> data(a.data(), a.data() + rows * cols);
    return Tensor::from_data(rows, cols, std::move(data));
}

py::array_t<double> array_from(const std::vector<real>& data, std::size_t rows,
                               std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

template <typename T>
py::array_t<T> vector_to_array(const std::vector<T>& data) {
    py::array_t<T> out(static_cast<py::ssize_t>(data.size()));
    std::copy(data.begin(), data.end(), out.mutable_data());
    return out;
}

RankLossConfig rank_cfg(double scale_factor, std::uint64_t shuffle_seed) {
    RankLossConfig cfg;
    cfg.scale_factor = scale_factor;
    cfg.shuffle_seed = shuffle_seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ranking-consistent contrastive training objective: losses, "
              "Plackett-Luce utilities, embedding metrics and the synthetic "
              "dataset generator.";

    m.def(
        "rank_loss",
        [](const py::array_t<double>& pred, const py::array_t<double>& ref, double scale_factor,
           std::uint64_t shuffle_seed) {
            return rank_loss(tensor_from_array(pred, "rank_loss"),
                             tensor_from_array(ref, "rank_loss"),
                             rank_cfg(scale_factor, shuffle_seed))
                .value();
        },
        py::arg("pred"), py::arg("reference"), py::arg("scale_factor") = 1.0,
        py::arg("shuffle_seed") = 0,
        "List-wise ranking NLL of pred ordered by the reference (mean over rows).");

    m.def(
        "rank_loss_grad",
        [](const py::array_t<double>& pred, const py::array_t<double>& ref, double scale_factor,
           std::uint64_t shuffle_seed) {
            Tensor p = tensor_from_array(pred, "rank_loss_grad").clone(true);
            Tensor loss = rank_loss(p, tensor_from_array(ref, "rank_loss_grad"),
                                    rank_cfg(scale_factor, shuffle_seed));
            backward(loss);
            return py::make_tuple(loss.value(), array_from(p.grad(), p.rows(), p.cols()));
        },
        py::arg("pred"), py::arg("reference"), py::arg("scale_factor") = 1.0,
        py::arg("shuffle_seed") = 0, "Loss value and its gradient with respect to pred.");

    m.def(
        "brute_force_rank_nll",
        [](const std::vector<double>& pred_row, const std::vector<double>& reference_row) {
            return brute_force_rank_nll(pred_row, reference_row);
        },
        py::arg("pred_row"), py::arg("reference_row"),
        "Factorial-cost oracle for one list (K <= 8).");

    m.def("pl_placement_prob", &pl_placement_prob, py::arg("scores"), py::arg("placed"),
          py::arg("candidate"));
    m.def("pl_ranking_prob", &pl_ranking_prob, py::arg("scores"), py::arg("order"));

    m.def(
        "clip_infonce",
        [](const py::array_t<double>& v, const py::array_t<double>& t, double tau) {
            return clip_infonce(tensor_from_array(v, "clip_infonce"),
                                tensor_from_array(t, "clip_infonce"), tau)
                .value();
        },
        py::arg("v_hat"), py::arg("t_hat"), py::arg("tau") = 0.07,
        "Symmetric InfoNCE over unit-norm batches.");

    m.def(
        "cross_modal_loss",
        [](const py::array_t<double>& v, const py::array_t<double>& t, double scale_factor,
           std::uint64_t shuffle_seed) {
            return cross_modal_loss(tensor_from_array(v, "cross_modal_loss"),
                                    tensor_from_array(t, "cross_modal_loss"),
                                    rank_cfg(scale_factor, shuffle_seed))
                .value();
        },
        py::arg("v_hat"), py::arg("t_hat"), py::arg("scale_factor") = 1.0,
        py::arg("shuffle_seed") = 0);

    m.def(
        "in_modal_loss",
        [](const py::array_t<double>& v, const py::array_t<double>& t, double scale_factor,
           std::uint64_t shuffle_seed) {
            return in_modal_loss(tensor_from_array(v, "in_modal_loss"),
                                 tensor_from_array(t, "in_modal_loss"),
                                 rank_cfg(scale_factor, shuffle_seed))
                .value();
        },
        py::arg("v_hat"), py::arg("t_hat"), py::arg("scale_factor") = 1.0,
        py::arg("shuffle_seed") = 0);

    m.def(
        "rankclip_total",
        [](const py::array_t<double>& v, const py::array_t<double>& t, double tau,
           double lambda1, double lambda2, const std::string& ablation, double scale_factor,
           std::uint64_t shuffle_seed) {
            LossConfig cfg;
            cfg.temperature_tau = tau;
            cfg.ablation = ablation_from_string(ablation);
            cfg.rank_cfg = rank_cfg(scale_factor, shuffle_seed);
            LossBreakdown b = rankclip_total(tensor_from_array(v, "rankclip_total"),
                                             tensor_from_array(t, "rankclip_total"), cfg,
                                             lambda1, lambda2);
            py::dict out;
            out["l_clip"] = b.l_clip;
            out["l_in"] = b.l_in;
            out["l_cross"] = b.l_cross;
            out["lambda1"] = b.lambda1;
            out["lambda2"] = b.lambda2;
            out["total"] = b.total;
            return out;
        },
        py::arg("v_hat"), py::arg("t_hat"), py::arg("tau") = 0.07, py::arg("lambda1") = 0.0625,
        py::arg("lambda2") = 0.0625, py::arg("ablation") = "full",
        py::arg("scale_factor") = 1.0, py::arg("shuffle_seed") = 0,
        "Combined loss breakdown: total = l_clip + lambda1*l_in + lambda2*l_cross.");

    m.def(
        "lambda_schedule",
        [](int epoch_i, int total_epochs_n, const std::string& mode,
           std::pair<double, double> fixed) {
            return lambda_schedule(epoch_i, total_epochs_n, lambda_mode_from_string(mode), fixed);
        },
        py::arg("epoch_i"), py::arg("total_epochs_n"), py::arg("mode") = "scheduled",
        py::arg("fixed") = std::pair<double, double>{0.0625, 0.0625},
        "Epoch weights: clip((3i-1)/(n-1), 0, 2) in scheduled mode.");

    m.def(
        "alignment_uniformity",
        [](const py::array_t<double>& v, const py::array_t<double>& t) {
            return alignment_uniformity(tensor_from_array(v, "alignment_uniformity"),
                                        tensor_from_array(t, "alignment_uniformity"));
        },
        py::arg("v_hat"), py::arg("t_hat"));

    m.def(
        "modality_gap",
        [](const py::array_t<double>& v, const py::array_t<double>& t) {
            return modality_gap(tensor_from_array(v, "modality_gap"),
                                tensor_from_array(t, "modality_gap"));
        },
        py::arg("v_hat"), py::arg("t_hat"), "Distance between the modality centroids.");

    m.def(
        "mean_pair_gap",
        [](const py::array_t<double>& v, const py::array_t<double>& t) {
            return mean_pair_gap(tensor_from_array(v, "mean_pair_gap"),
                                 tensor_from_array(t, "mean_pair_gap"));
        },
        py::arg("v_hat"), py::arg("t_hat"));

    m.def(
        "consistency_spearman",
        [](const py::array_t<double>& v, const py::array_t<double>& t) {
            return consistency_spearman(tensor_from_array(v, "consistency_spearman"),
                                        tensor_from_array(t, "consistency_spearman"));
        },
        py::arg("v_hat"), py::arg("t_hat"),
        "Mean per-row Spearman correlation of the two in-modal similarity structures.");

    m.def("spearman", &spearman, py::arg("a"), py::arg("b"));

    m.def(
        "generate_dataset",
        [](std::size_t num_superclasses, std::size_t subclasses_per_superclass,
           std::size_t latent_dim, std::size_t image_dim, std::size_t text_dim,
           double within_super_corr, double noise_std, std::size_t pairs_per_class,
           std::size_t eval_pairs, std::uint64_t seed) {
            DatasetSpec spec;
            spec.num_superclasses = num_superclasses;
            spec.subclasses_per_superclass = subclasses_per_superclass;
            spec.latent_dim = latent_dim;
            spec.image_dim = image_dim;
            spec.text_dim = text_dim;
            spec.within_super_corr = within_super_corr;
            spec.noise_std = noise_std;
            spec.pairs_per_class = pairs_per_class;
            spec.eval_pairs = eval_pairs;
            spec.seed = seed;
            PairedDataset ds = generate_dataset(spec);
            py::dict out;
            out["image_raw"] = array_from(ds.image_raw, ds.num_pairs, ds.image_dim);
            out["text_raw"] = array_from(ds.text_raw, ds.num_pairs, ds.text_dim);
            out["labels"] = vector_to_array(ds.labels);
            out["class_prototype_sim"] =
                array_from(ds.class_prototype_sim, ds.num_classes, ds.num_classes);
            out["split"] = vector_to_array(ds.split);
            return out;
        },
        py::arg("num_superclasses") = 4, py::arg("subclasses_per_superclass") = 4,
        py::arg("latent_dim") = 32, py::arg("image_dim") = 64, py::arg("text_dim") = 48,
        py::arg("within_super_corr") = 0.6, py::arg("noise_std") = 0.1,
        py::arg("pairs_per_class") = 500, py::arg("eval_pairs") = 1000, py::arg("seed") = 0,
        "Hierarchical paired dataset with a known prototype similarity matrix.");
}
