/* Driver: synthesizes a trajectory, computes Q and checks a few samples. */
#include <stdio.h>
#include <stdlib.h>
#include <math.h>
#include "mriq.h"

int numK = 3072;
int numX = 32768;
float *kx, *ky, *kz, *phiR, *phiI, *phiMag;
float *x, *y, *z, *Qr, *Qi;
struct kValues *kVals;
double refR[NUM_SAMPLES], refI[NUM_SAMPLES];
int histogram[HIST_BINS];

void make_trajectory(void)
{
    int k;
    // offload: trip=3072
    for (k = 0; k < numK; k++) {
        kx[k] = 0.5f * sin(PIx2 * k / numK);
        ky[k] = 0.5f * cos(PIx2 * k / numK);
        kz[k] = (k % 32) / 64.0f - 0.25f;
        phiR[k] = 1.0f / (1 + k % 7);
        phiI[k] = 0.5f / (1 + k % 5);
    }
}

void make_voxels(void)
{
    int i;
    // offload: trip=32768
    for (i = 0; i < numX; i++) {
        x[i] = (i % 32) / 32.0f - 0.5f;
        y[i] = ((i / 32) % 32) / 32.0f - 0.5f;
        z[i] = (i / 1024) / 32.0f - 0.5f;
    }
}

double q_energy(void)
{
    int i;
    double total = 0.0;
    // offload: trip=32768
    for (i = 0; i < numX; i++) {
        total += Qr[i] * Qr[i] + Qi[i] * Qi[i];
    }
    return total;
}

void phase_histogram(void)
{
    int i, bin;
    for (bin = 0; bin < HIST_BINS; bin++) {
        histogram[bin] = 0;
    }
    // offload: trip=32768
    for (i = 0; i < numX; i++) {
        bin = (int)((atan2(Qi[i], Qr[i]) / PIx2 + 0.5) * (HIST_BINS - 1));
        histogram[bin] += 1;
    }
}

int check_samples(void)
{
    int s = 0, bad = 0, p;
    double err;
    while (s < NUM_SAMPLES) {
        p = (s * 997) % numX;
        err = fabs(refR[s] - Qr[p]) + fabs(refI[s] - Qi[p]);
        if (err > 1e-2 * (1.0 + fabs(refR[s]))) {
            bad++;
        }
        s++;
    }
    return bad;
}

float max_magnitude(void)
{
    int i = 0;
    float m = 0.0f, v;
    do {
        v = sqrt(Qr[i] * Qr[i] + Qi[i] * Qi[i]);
        m = v > m ? v : m;
        i++;
    } while (i < numX);
    return m;
}

void write_output(FILE *out)
{
    int i;
    for (i = 0; i < numX; i++) {
        fprintf(out, "%.6e %.6e\n", Qr[i], Qi[i]);
    }
}

int main(int argc, char **argv)
{
    int rep, reps = 1, bad;
    if (argc > 1) {
        reps = atoi(argv[1]);
    }
    kx = (float *)malloc(numK * sizeof(float));
    ky = (float *)malloc(numK * sizeof(float));
    kz = (float *)malloc(numK * sizeof(float));
    phiR = (float *)malloc(numK * sizeof(float));
    phiI = (float *)malloc(numK * sizeof(float));
    phiMag = (float *)malloc(numK * sizeof(float));
    kVals = (struct kValues *)malloc(numK * sizeof(struct kValues));
    x = (float *)malloc(numX * sizeof(float));
    y = (float *)malloc(numX * sizeof(float));
    z = (float *)malloc(numX * sizeof(float));
    Qr = (float *)malloc(numX * sizeof(float));
    Qi = (float *)malloc(numX * sizeof(float));

    make_trajectory();
    make_voxels();
    compute_phi_mag(numK, phiR, phiI, phiMag);
    pack_k_values(numK, kx, ky, kz, phiMag, kVals);
    for (rep = 0; rep < reps; rep++) {
        clear_q(numX, Qr, Qi);
        compute_q(numK, numX, kVals, x, y, z, Qr, Qi);
    }
    reference_samples(numK, numX, kVals, x, y, z, refR, refI);
    bad = check_samples();
    phase_histogram();
    printf("energy %.6e max %.6e bad %d\n", q_energy(), max_magnitude(), bad);
    write_output(stdout);
    return bad == 0 ? 0 : 1;
}
