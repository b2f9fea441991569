#include "mpimux/k8s.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mpimux::k8s {

namespace {

bool valid_sim_label(const std::string& sim) {
    if (sim.empty()) return false;
    return std::all_of(sim.begin(), sim.end(), [](unsigned char c) {
        return std::isalnum(c) != 0;
    });
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

std::string pod_name(const std::string& sim, int rank) {
    if (!valid_sim_label(sim))
        throw InputError("simulation label '" + sim + "' must be non-empty alphanumeric");
    if (rank < 0)
        throw InputError("negative rank");
    return "of-worker-" + lower(sim) + "-" + std::to_string(rank);
}

std::string emit_pod_manifest(const PodManifestSpec& spec) {
    if (spec.cpu_request_millicpu < 10)
        throw ConstraintError("CPU request below the 10 m floor");
    if (spec.image.empty())
        throw InputError("empty image");
    std::ostringstream out;
    out << "apiVersion: v1\n";
    out << "kind: Pod\n";
    out << "metadata:\n";
    out << "  name: " << pod_name(spec.sim, spec.rank) << "\n";
    out << "  labels:\n";
    out << "    app: openfoam\n";
    out << "    role: worker\n";
    out << "    sim: " << spec.sim << "\n";
    out << "spec:\n";
    out << "  containers:\n";
    out << "  - name: openfoam\n";
    out << "    image: " << spec.image << "\n";
    out << "    resources:\n";
    out << "      requests:\n";
    out << "        cpu: \"" << spec.cpu_request_millicpu << "m\"\n";
    out << "    resizePolicy:\n";
    out << "    - resourceName: cpu\n";
    out << "      restartPolicy: NotRequired\n";
    return out.str();
}

std::string emit_hostfile_configmap(const std::string& sim,
                                    const std::vector<std::string>& ips) {
    if (!valid_sim_label(sim))
        throw InputError("simulation label '" + sim + "' must be non-empty alphanumeric");
    if (ips.empty())
        throw InputError("hostfile needs at least one address");
    std::set<std::string> seen;
    for (const auto& ip : ips) {
        if (ip.empty())
            throw InputError("empty address in hostfile");
        if (!seen.insert(ip).second)
            throw InputError("duplicate address '" + ip + "': every rank has its own pod");
    }
    std::ostringstream out;
    out << "apiVersion: v1\n";
    out << "kind: ConfigMap\n";
    out << "metadata:\n";
    out << "  name: hostfile-" << lower(sim) << "\n";
    out << "data:\n";
    out << "  hostfile: |\n";
    for (const auto& ip : ips) out << "    " << ip << " slots=1\n";
    return out.str();
}

std::string emit_resize_patch(const std::string& pod_name, int new_millicpu) {
    if (pod_name.empty())
        throw InputError("empty pod name");
    for (unsigned char c : pod_name)
        if (std::isalnum(c) == 0 && c != '-')
            throw InputError("invalid character in pod name '" + pod_name + "'");
    if (new_millicpu < 10)
        throw ConstraintError("resize below the 10 m floor");

    nlohmann::ordered_json patch = {
        {"spec",
         {{"containers",
           {{{"name", "openfoam"},
             {"resources",
              {{"requests", {{"cpu", std::to_string(new_millicpu) + "m"}}}}}}}}}}};
    return patch.dump();
}

std::string emit_mpirun_command(const std::string& sim, int n_ranks,
                                const std::string& hostfile_path) {
    if (!valid_sim_label(sim))
        throw InputError("simulation label '" + sim + "' must be non-empty alphanumeric");
    if (n_ranks < 1)
        throw InputError("need at least one rank");
    if (hostfile_path.empty())
        throw InputError("missing hostfile path");
    std::ostringstream out;
    out << "mpirun -np " << n_ranks << " --hostfile " << hostfile_path
        << " --mca btl tcp,self rhoSimpleFoam -parallel -case /cases/sim-" << lower(sim);
    return out.str();
}

} // namespace mpimux::k8s
