#pragma once

#include <string>

#include <json.hpp>

#include "gencs/errors.hpp"
#include "gencs/experiment.hpp"

namespace gencs {

/// JSON schema for experiment configs (all keys optional, defaults shown in
/// README): top-level objects "data", "model", "train", "recover" plus
/// n_test/trials/m_list/methods/im/timing.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        if (j.contains("data")) {
            const auto& d = j.at("data");
            cfg.data.d = d.value("d", cfg.data.d);
            cfg.data.true_latent = d.value("true_latent", cfg.data.true_latent);
            if (d.contains("sparsity")) cfg.data.sparsity = d.at("sparsity").get<int>();
            if (d.contains("transform")) {
                const std::string t = d.at("transform").get<std::string>();
                if (t == "identity") {
                    cfg.data.transform = TransformKind::identity;
                } else if (t == "haar") {
                    cfg.data.transform = TransformKind::haar;
                } else {
                    throw ParameterError("config: unknown transform '" + t + "'");
                }
            }
            cfg.data.n = d.value("n_train", cfg.data.n);
            cfg.data.margin = d.value("margin", cfg.data.margin);
        }
        cfg.n_test = j.value("n_test", cfg.n_test);
        cfg.trials = j.value("trials", cfg.trials);
        if (j.contains("m_list")) cfg.m_list = j.at("m_list").get<std::vector<int>>();
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods")) {
                cfg.methods.push_back(method_from_name(m.get<std::string>()));
            }
        }
        if (j.contains("im")) {
            const auto& im = j.at("im");
            if (im.is_boolean()) {
                cfg.run_im = im.get<bool>();
                cfg.run_marginal = !cfg.run_im;
            } else if (im.get<std::string>() == "both") {
                cfg.run_marginal = cfg.run_im = true;
            } else {
                throw ParameterError("config: im must be true, false, or \"both\"");
            }
        }
        if (j.contains("model")) {
            const auto& mo = j.at("model");
            cfg.model.latent_dim = mo.value("latent_dim", cfg.model.latent_dim);
            cfg.model.latent_dim_im = mo.value("latent_dim_im", cfg.model.latent_dim_im);
            if (mo.contains("gen_hidden")) {
                cfg.model.gen_hidden = mo.at("gen_hidden").get<std::vector<int>>();
            }
            if (mo.contains("disc_hidden")) {
                cfg.model.disc_hidden = mo.at("disc_hidden").get<std::vector<int>>();
            }
            if (mo.contains("gen_output")) {
                cfg.model.gen_output = activation_from_name(mo.at("gen_output").get<std::string>());
            }
            cfg.model.ablation_matched = mo.value("ablation_matched", cfg.model.ablation_matched);
        }
        if (j.contains("train")) {
            const auto& tr = j.at("train");
            if (tr.contains("objective")) {
                cfg.train.objective = objective_from_name(tr.at("objective").get<std::string>());
            }
            cfg.train.steps = tr.value("steps", cfg.train.steps);
            cfg.train.batch = tr.value("batch", cfg.train.batch);
            cfg.train.lr = tr.value("lr", cfg.train.lr);
            cfg.train.began_lambda = tr.value("began_lambda", cfg.train.began_lambda);
            cfg.train.began_gamma = tr.value("began_gamma", cfg.train.began_gamma);
            cfg.train.began_norm = tr.value("began_norm", cfg.train.began_norm);
            cfg.train.dcs_lambda = tr.value("dcs_lambda", cfg.train.dcs_lambda);
            cfg.train.dcs_inner_steps = tr.value("dcs_inner_steps", cfg.train.dcs_inner_steps);
            cfg.train.dcs_inner_lr = tr.value("dcs_inner_lr", cfg.train.dcs_inner_lr);
            cfg.dcs_lr = tr.value("dcs_lr", cfg.dcs_lr);
            if (tr.contains("dcs_steps")) cfg.dcs_steps = tr.at("dcs_steps").get<int>();
        }
        if (j.contains("recover")) {
            for (const auto& [key, value] : j.at("recover").items()) {
                method_from_name(key); // validate the method name
                cfg.recover_overrides[key] = value;
            }
        }
        cfg.timing = j.value("timing", cfg.timing);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParameterError("config: parse error in " + path + ": " + e.what());
    }
    return j;
}

} // namespace gencs
