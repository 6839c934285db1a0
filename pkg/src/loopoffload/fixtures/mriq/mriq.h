#ifndef MRIQ_H
#define MRIQ_H

#define PIx2 6.2831853071795864769
#define NUM_SAMPLES 16
#define HIST_BINS 64

struct kValues {
    float Kx;
    float Ky;
    float Kz;
    float PhiMag;
};

void compute_phi_mag(int numK, float *phiR, float *phiI, float *phiMag);
void pack_k_values(int numK, float *kx, float *ky, float *kz, float *phiMag, struct kValues *kVals);
void compute_q(int numK, int numX, struct kValues *kVals, float *x, float *y, float *z, float *Qr, float *Qi);

#endif
