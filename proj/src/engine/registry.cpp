#include "strand/engine/registry.hpp"

#include "strand/core/errors.hpp"

namespace strand::engine {

const SeriesWindow& ModelCall::input(const std::string& name) const {
    for (std::size_t i = 0; i < model.inputs.size() && i < inputs.size(); ++i) {
        if (model.inputs[i].name == name) {
            return inputs[i];
        }
    }
    throw ModelFailure("model '" + model.id + "' has no input '" + name + "'");
}

double ModelCall::param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) {
        throw ModelFailure("model '" + model.id + "' has no parameter '" + name + "'");
    }
    return it->second;
}

void ModelRegistry::add(const std::string& name, ModelFunction fn) { functions_[name] = std::move(fn); }

const ModelFunction* ModelRegistry::find(const std::string& name) const {
    auto it = functions_.find(name);
    return it == functions_.end() ? nullptr : &it->second;
}

std::set<std::string> ModelRegistry::names() const {
    std::set<std::string> out;
    for (const auto& [name, _] : functions_) {
        out.insert(name);
    }
    return out;
}

ModelRegistry ModelRegistry::with_builtins() {
    ModelRegistry r;
    r.add("identity", [](const ModelCall& call) {
        if (call.inputs.size() != call.model.outputs.size()) {
            throw ModelFailure("identity model needs as many outputs as inputs");
        }
        ModelResult result;
        for (std::size_t i = 0; i < call.inputs.size(); ++i) {
            SeriesWindow out = call.inputs[i];
            out.variable = call.model.outputs[i].name;
            result.outputs.push_back(std::move(out));
        }
        return result;
    });
    return r;
}

}  // namespace strand::engine
