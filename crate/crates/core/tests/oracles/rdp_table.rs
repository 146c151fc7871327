// Frozen output of tests/oracles/rdp_mpmath.py (80-digit direct summation).
pub const RDP_ORACLE: &[(f64, f64, u32, f64)] = &[
    (0.1, 0.5, 2, 4.2916959059789968e-1),
    (0.1, 0.5, 3, 2.5535812800204852),
    (0.1, 0.5, 5, 7.1217698999154891),
    (0.1, 0.5, 8, 1.3368474179442488e+1),
    (0.1, 0.5, 16, 2.9543909234139685e+1),
    (0.1, 0.5, 32, 6.1623137968522275e+1),
    (0.1, 0.5, 64, 1.2566086593727589e+2),
    (0.1, 0.5, 128, 2.5367928431572254e+2),
    (0.1, 0.5, 256, 5.0968838516154323e+2),
    (0.1, 0.75, 2, 4.7996454890916729e-2),
    (0.1, 0.75, 3, 1.4591596587033287e-1),
    (0.1, 0.75, 5, 1.5766132033172609),
    (0.1, 0.75, 8, 4.4796258356887923),
    (0.1, 0.75, 16, 1.1766131456387089e+1),
    (0.1, 0.75, 32, 2.606758241296672e+1),
    (0.1, 0.75, 64, 5.4549754826164779e+1),
    (0.1, 0.75, 128, 1.1145706209350031e+2),
    (0.1, 0.75, 256, 2.2524394071709879e+2),
    (0.1, 1.0, 2, 1.703686323617655e-2),
    (0.1, 1.0, 3, 3.1712300303376425e-2),
    (0.1, 1.0, 5, 1.29877433283997e-1),
    (0.1, 1.0, 8, 1.3783614113481265),
    (0.1, 1.0, 16, 5.5439121709021214),
    (0.1, 1.0, 32, 1.3623137968522595e+1),
    (0.1, 1.0, 64, 2.966086593727589e+1),
    (0.1, 1.0, 128, 6.1679284315722537e+1),
    (0.1, 1.0, 256, 1.2568838516154323e+2),
    (0.1, 1.5, 2, 5.5806342296798082e-3),
    (0.1, 1.5, 3, 8.8725611055217995e-3),
    (0.1, 1.5, 5, 1.6983145901666416e-2),
    (0.1, 1.5, 8, 3.7479667882712269e-2),
    (0.1, 1.5, 16, 1.1122580006035943),
    (0.1, 1.5, 32, 4.7342587279404194),
    (0.1, 1.5, 64, 1.1883088159504434e+1),
    (0.1, 1.5, 128, 2.6123728760166981e+1),
    (0.1, 1.5, 256, 5.4577274050432121e+1),
    (0.1, 2.0, 2, 2.8362282662636223e-3),
    (0.1, 2.0, 3, 4.373658348577058e-3),
    (0.1, 2.0, 5, 7.7369684897958643e-3),
    (0.1, 2.0, 8, 1.3725430103219918e-2),
    (0.1, 2.0, 16, 4.5291839083621959e-2),
    (0.1, 2.0, 32, 1.6272023010194358),
    (0.1, 2.0, 64, 5.6608672584151993),
    (0.1, 2.0, 128, 1.3679284315722684e+1),
    (0.1, 2.0, 256, 2.9688385161543233e+1),
    (0.01, 0.5, 2, 5.3455023143452553e-3),
    (0.01, 0.5, 3, 8.2194377982107457e-2),
    (0.01, 0.5, 5, 4.2435512214684665),
    (0.01, 0.5, 8, 1.0736948358948984e+1),
    (0.01, 0.5, 16, 2.7087818468279369e+1),
    (0.01, 0.5, 32, 5.9246275937044551e+1),
    (0.01, 0.5, 64, 1.2332173187455178e+2),
    (0.01, 0.5, 128, 2.5135856863144507e+2),
    (0.01, 0.5, 256, 5.0737677032308647e+2),
    (0.01, 0.75, 2, 4.9154852929102044e-4),
    (0.01, 0.75, 3, 8.3249918296368713e-4),
    (0.01, 0.75, 5, 3.5181634619078634e-3),
    (0.01, 0.75, 8, 1.8485085557067736),
    (0.01, 0.75, 16, 9.3100406907785901),
    (0.01, 0.75, 32, 2.3690720381488995e+1),
    (0.01, 0.75, 64, 5.2210620763440669e+1),
    (0.01, 0.75, 128, 1.0913634640922285e+2),
    (0.01, 0.75, 256, 2.2293232587864202e+2),
    (0.01, 1.0, 2, 1.7181342207454793e-4),
    (0.01, 1.0, 3, 2.6463757458466135e-4),
    (0.01, 1.0, 5, 4.686672421691548e-4),
    (0.01, 1.0, 8, 8.9364390760603185e-4),
    (0.01, 1.0, 16, 3.0878507836962446),
    (0.01, 1.0, 32, 1.1246275937048069e+1),
    (0.01, 1.0, 64, 2.732173187455178e+1),
    (0.01, 1.0, 128, 5.9358568631445073e+1),
    (0.01, 1.0, 256, 1.2337677032308647e+2),
    (0.01, 1.5, 2, 5.5960783926800926e-5),
    (0.01, 1.5, 3, 8.4493783740295465e-5),
    (0.01, 1.5, 5, 1.4272279621380866e-4),
    (0.01, 1.5, 8, 2.331683317175975e-4),
    (0.01, 1.5, 16, 4.9569786136347109e-4),
    (0.01, 1.5, 32, 2.3574932607812135),
    (0.01, 1.5, 64, 9.5439540968435415),
    (0.01, 1.5, 128, 2.3803013075889518e+1),
    (0.01, 1.5, 256, 5.2265659211975354e+1),
    (0.01, 2.0, 2, 2.8402138324224847e-5),
    (0.01, 2.0, 3, 4.2734448101351601e-5),
    (0.01, 2.0, 5, 7.1667415783335218e-5),
    (0.01, 2.0, 8, 1.1575614792991031e-4),
    (0.01, 2.0, 16, 2.3762401964046019e-4),
    (0.01, 2.0, 32, 5.0289464686279095e-4),
    (0.01, 2.0, 64, 3.3217464086810074),
    (0.01, 2.0, 128, 1.1358568631446696e+1),
    (0.01, 2.0, 256, 2.7376770323086465e+1),
    (0.001, 0.5, 2, 5.3596713703623592e-5),
    (0.001, 0.5, 3, 1.6166758430918457e-4),
    (0.001, 0.5, 5, 1.3665079165052154),
    (0.001, 0.5, 8, 8.1054225390955561),
    (0.001, 0.5, 16, 2.4631727702419054e+1),
    (0.001, 0.5, 32, 5.6869413905566826e+1),
    (0.001, 0.5, 64, 1.2098259781182767e+2),
    (0.001, 0.5, 128, 2.4903785294716761e+2),
    (0.001, 0.5, 256, 5.050651554846297e+2),
    (0.001, 0.75, 2, 4.916681503766016e-6),
    (0.001, 0.75, 3, 7.4706731588200051e-6),
    (0.001, 0.75, 5, 1.2835570473271273e-5),
    (0.001, 0.75, 8, 6.3390697494371758e-4),
    (0.001, 0.75, 16, 6.853949927436445),
    (0.001, 0.75, 32, 2.1313858350011271e+1),
    (0.001, 0.75, 64, 4.9871486700716559e+1),
    (0.001, 0.75, 128, 1.0681563072494539e+2),
    (0.001, 0.75, 256, 2.2062071104018525e+2),
    (0.001, 1.0, 2, 1.7182803522145153e-6),
    (0.001, 1.0, 3, 2.5843814093686966e-6),
    (0.001, 1.0, 5, 4.3309193279706205e-6),
    (0.001, 1.0, 8, 6.9879416490941468e-6),
    (0.001, 1.0, 16, 6.3206000792593389e-1),
    (0.001, 1.0, 32, 8.869413905602326),
    (0.001, 1.0, 64, 2.498259781182767e+1),
    (0.001, 1.0, 128, 5.703785294716761e+1),
    (0.001, 1.0, 256, 1.210651554846297e+2),
    (0.001, 1.5, 2, 5.596233410176096e-7),
    (0.001, 1.5, 3, 8.399919395242489e-7),
    (0.001, 1.5, 5, 1.4018487857694591e-6),
    (0.001, 1.5, 8, 2.2474507587907904e-6),
    (0.001, 1.5, 16, 4.5191420912159675e-6),
    (0.001, 1.5, 32, 1.4461800357845934e-2),
    (0.001, 1.5, 64, 7.2048200347516054),
    (0.001, 1.5, 128, 2.1482297391612054e+1),
    (0.001, 1.5, 256, 4.9954044373518587e+1),
    (0.001, 2.0, 2, 2.8402537635253046e-7),
    (0.001, 2.0, 3, 4.26170405293621e-7),
    (0.001, 2.0, 5, 7.1072573870044734e-7),
    (0.001, 2.0, 8, 1.1382237177147441e-6),
    (0.001, 2.0, 16, 2.282142474371968e-6),
    (0.001, 2.0, 32, 4.5873148985516596e-6),
    (0.001, 2.0, 64, 9.8274463596303862e-1),
    (0.001, 2.0, 128, 9.0378529471839827),
    (0.001, 2.0, 256, 2.5065155484629698e+1),
];
