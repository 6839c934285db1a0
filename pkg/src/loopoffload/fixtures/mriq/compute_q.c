/* Q-matrix computation for non-Cartesian MRI reconstruction. */
#include <math.h>
#include "mriq.h"

void compute_phi_mag(int numK, float *phiR, float *phiI, float *phiMag)
{
    int k;
    // offload: trip=3072
    for (k = 0; k < numK; k++) {
        phiMag[k] = phiR[k] * phiR[k] + phiI[k] * phiI[k];
    }
}

void pack_k_values(int numK, float *kx, float *ky, float *kz, float *phiMag, struct kValues *kVals)
{
    int k;
    // offload: trip=3072
    for (k = 0; k < numK; k++) {
        kVals[k].Kx = kx[k];
        kVals[k].Ky = ky[k];
        kVals[k].Kz = kz[k];
        kVals[k].PhiMag = phiMag[k];
    }
}

void clear_q(int numX, float *Qr, float *Qi)
{
    int x;
    // offload: trip=32768
    for (x = 0; x < numX; x++) {
        Qr[x] = 0.0f;
        Qi[x] = 0.0f;
    }
}

void compute_q(int numK, int numX, struct kValues *kVals, float *x, float *y, float *z, float *Qr, float *Qi)
{
    int indexX, indexK;
    float expArg, cosArg, sinArg;
    // offload: trip=32768
    for (indexX = 0; indexX < numX; indexX++) {
        // offload: trip=3072
        for (indexK = 0; indexK < numK; indexK++) {
            expArg = PIx2 * (kVals[indexK].Kx * x[indexX] + kVals[indexK].Ky * y[indexX] + kVals[indexK].Kz * z[indexX]);
            cosArg = cos(expArg);
            sinArg = sin(expArg);
            Qr[indexX] += kVals[indexK].PhiMag * cosArg;
            Qi[indexX] += kVals[indexK].PhiMag * sinArg;
        }
    }
}

/* double-precision Q at a few sample points, for validation */
void reference_samples(int numK, int numX, struct kValues *kVals, float *x, float *y, float *z, double *refR, double *refI)
{
    int s, k, p;
    double arg;
    for (s = 0; s < NUM_SAMPLES; s++) {
        p = (s * 997) % numX;
        refR[s] = 0.0;
        refI[s] = 0.0;
        // offload: trip=3072
        for (k = 0; k < numK; k++) {
            arg = PIx2 * ((double)kVals[k].Kx * x[p] + (double)kVals[k].Ky * y[p] + (double)kVals[k].Kz * z[p]);
            refR[s] += kVals[k].PhiMag * cos(arg);
            refI[s] += kVals[k].PhiMag * sin(arg);
        }
    }
}
