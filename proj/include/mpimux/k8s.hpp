#pragma once

#include <string>
#include <vector>

#include "mpimux/common.hpp"

namespace mpimux::k8s {

struct PodManifestSpec {
    std::string sim;   // simulation label, e.g. "A"
    int rank = 0;
    std::string image = "openfoam-k8s:v10";
    int cpu_request_millicpu = 0; // >= 10
};

/// `of-worker-<sim>-<rank>` with a lowercased simulation label.
std::string pod_name(const std::string& sim, int rank);

/// Worker pod manifest: CPU request only (no limits key anywhere) plus a
/// resize policy allowing in-place CPU changes without restart. Field
/// order and indentation are fixed so output is golden-file comparable.
std::string emit_pod_manifest(const PodManifestSpec& spec);

/// ConfigMap `hostfile-<sim>` whose payload lists one pod IP per line with
/// `slots=1`. Addresses must be distinct (one pod per rank).
std::string emit_hostfile_configmap(const std::string& sim,
                                    const std::vector<std::string>& ips);

/// JSON body for the pod resize subresource updating only the container's
/// CPU request: {"spec":{"containers":[{"name":"openfoam","resources":
/// {"requests":{"cpu":"<n>m"}}}]}}. Emitted even when the value equals the
/// current request; suppression is the caller's call.
std::string emit_resize_patch(const std::string& pod_name, int new_millicpu);

/// mpirun invocation pinned to TCP transport so co-located jobs can't
/// interfere through the shared-memory BTL.
std::string emit_mpirun_command(const std::string& sim, int n_ranks,
                                const std::string& hostfile_path);

} // namespace mpimux::k8s
